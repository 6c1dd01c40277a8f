//! Per-step interaction pipeline.
//!
//! Each step visits every agent once, in a fresh random order, and runs:
//! perception of occupied Moore neighbors, trust update, valence and
//! avoidance, frustration switch, contagion with hysteresis, and history
//! append. Neighbor emotions are read from a snapshot taken at the start of
//! the step; movement is applied immediately against the live grid. An
//! optional shock is applied once all agents have acted.

use rand::seq::{index, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::agent::{AgentState, History};
use crate::emotion::Emotion;
use crate::error::{Error, Result};
use crate::grid::{AgentId, Grid, GridPos};
use crate::perception::sample_row;
use crate::world::World;

/// Slack for float round-off in the contagion share test, so that e.g.
/// 7 of 10 still meets a threshold of 0.7.
const SHARE_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PerceptionMode {
    /// Look up the frozen per-(identity, emotion) table.
    #[default]
    Frozen,
    /// Resample from the confusion matrix at every encounter.
    Stochastic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrustUpdate {
    /// One EMA application per neighbor in canonical order.
    #[default]
    Sequential,
    /// One EMA application per step using the mean correctness.
    BatchMean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StepParams {
    pub alpha: f64,
    pub tau_valence: i32,
    pub tau_sad: f64,
    pub tau_contagion: f64,
    pub hysteresis_max: usize,
    pub history_len: usize,
    pub perception: PerceptionMode,
    pub trust_update: TrustUpdate,
}

impl Default for StepParams {
    fn default() -> Self {
        StepParams {
            alpha: 0.1,
            tau_valence: -1,
            tau_sad: 0.3,
            tau_contagion: 0.7,
            hysteresis_max: 2,
            history_len: 5,
            perception: PerceptionMode::Frozen,
            trust_update: TrustUpdate::Sequential,
        }
    }
}

impl StepParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("alpha must lie in (0, 1), got {}", self.alpha));
        }
        if !(0.0..=1.0).contains(&self.tau_sad) {
            return bad(format!("tau_sad must lie in [0, 1], got {}", self.tau_sad));
        }
        if !(self.tau_contagion > 0.0 && self.tau_contagion <= 1.0) {
            return bad(format!("tau_contagion must lie in (0, 1], got {}", self.tau_contagion));
        }
        if self.history_len == 0 {
            return bad("history_len must be at least 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShockSchedule {
    pub period: usize,
    pub fraction: f64,
    pub emotion_pool: Vec<Emotion>,
}

impl Default for ShockSchedule {
    fn default() -> Self {
        ShockSchedule {
            period: 10,
            fraction: 0.2,
            emotion_pool: Emotion::NEGATIVE.to_vec(),
        }
    }
}

impl ShockSchedule {
    pub fn validate(&self) -> Result<()> {
        if self.period == 0 {
            return Err(Error::InvalidParameter("shock period must be at least 1".into()));
        }
        if !(self.fraction > 0.0 && self.fraction <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "shock fraction must lie in (0, 1], got {}",
                self.fraction
            )));
        }
        if self.emotion_pool.is_empty() {
            return Err(Error::InvalidParameter("shock emotion pool is empty".into()));
        }
        Ok(())
    }

    pub fn fires_at(&self, t: usize) -> bool {
        t > 0 && t.is_multiple_of(self.period)
    }
}

/// +1 per positive and -1 per negative perceived emotion.
pub fn compute_valence(perceived: &[Emotion]) -> i32 {
    perceived.iter().map(|e| if e.is_positive() { 1 } else { -1 }).sum()
}

/// Applies `T <- (1 - alpha) T + alpha (1 - error)` once per entry of
/// `errors`, in order.
pub fn update_trust(trust: f64, errors: &[bool], alpha: f64) -> f64 {
    errors.iter().fold(trust, |t, &err| ema(t, if err { 0.0 } else { 1.0 }, alpha))
}

/// Single EMA application towards the mean correctness of `errors`.
pub fn update_trust_batch(trust: f64, errors: &[bool], alpha: f64) -> f64 {
    if errors.is_empty() {
        return trust;
    }
    let correct = errors.iter().filter(|&&e| !e).count() as f64 / errors.len() as f64;
    ema(trust, correct, alpha)
}

#[inline]
fn ema(trust: f64, target: f64, alpha: f64) -> f64 {
    ((1.0 - alpha) * trust + alpha * target).clamp(0.0, 1.0)
}

/// Sad when trust is strictly below `tau_sad`, otherwise the current
/// emotion.
pub fn frustration_switch(agent: &AgentState, tau_sad: f64) -> Emotion {
    if agent.trust < tau_sad {
        Emotion::Sad
    } else {
        agent.emotion
    }
}

/// The emotion holding at least a `tau_contagion` share of `perceived`, if
/// any. For thresholds at or below one half several emotions may qualify;
/// the most frequent wins, ties going to the earliest in canonical order.
pub fn contagion_candidate(perceived: &[Emotion], tau_contagion: f64) -> Option<Emotion> {
    if perceived.is_empty() {
        return None;
    }
    let mut counts = [0usize; Emotion::COUNT];
    for e in perceived {
        counts[e.index()] += 1;
    }
    let needed = tau_contagion * perceived.len() as f64 - SHARE_EPS;
    let (best, count) = counts
        .iter()
        .enumerate()
        .fold((0, 0), |acc, (i, &c)| if c > acc.1 { (i, c) } else { acc });
    (count > 0 && count as f64 >= needed).then(|| Emotion::ALL[best])
}

pub fn hysteresis_allows(history: &History, candidate: Emotion, hysteresis_max: usize) -> bool {
    history.count(candidate) <= hysteresis_max
}

/// A uniformly chosen free Moore-adjacent cell when `valence` is strictly
/// below `tau_valence`.
pub fn select_avoidance_move<R: Rng + ?Sized>(
    pos: GridPos,
    grid: &Grid,
    valence: i32,
    tau_valence: i32,
    rng: &mut R,
) -> Option<GridPos> {
    if valence >= tau_valence {
        return None;
    }
    let free: Vec<GridPos> = grid
        .moore_neighbors(pos)
        .iter()
        .filter(|(_, occ)| occ.is_none())
        .map(|(p, _)| *p)
        .collect();
    free.choose(rng).copied()
}

/// Reassigns `round(fraction * N)` distinct agents to emotions drawn
/// uniformly from the pool when `t` is a multiple of the period. Returns the
/// shocked agents.
pub fn apply_shock<R: Rng + ?Sized>(
    agents: &mut [AgentState],
    schedule: &ShockSchedule,
    t: usize,
    rng: &mut R,
) -> Vec<AgentId> {
    if !schedule.fires_at(t) || agents.is_empty() || schedule.emotion_pool.is_empty() {
        return Vec::new();
    }
    let n = agents.len();
    let k = ((schedule.fraction * n as f64).round() as usize).min(n);
    let mut chosen = index::sample(rng, n, k).into_vec();
    // draw emotions in agent order so the assignment does not depend on the
    // sampler's internal ordering
    chosen.sort_unstable();
    for &i in &chosen {
        let e = *schedule.emotion_pool.choose(rng).expect("non-empty pool");
        agents[i].emotion = e;
        agents[i].history.push(e);
    }
    chosen.into_iter().map(AgentId).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Move {
    pub agent: AgentId,
    pub from: GridPos,
    pub to: GridPos,
    /// Whether `to` was free immediately before the move.
    pub target_was_free: bool,
}

/// What happened during one step; used by trace-level invariant checks.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StepTrace {
    pub order: Vec<AgentId>,
    pub moves: Vec<Move>,
    pub frustrated: Vec<AgentId>,
    pub adopted: Vec<(AgentId, Emotion)>,
    pub shocked: Vec<AgentId>,
}

/// Advances `world` by one step.
pub fn step<R: Rng + ?Sized>(
    world: &mut World,
    params: &StepParams,
    shocks: Option<&ShockSchedule>,
    rng: &mut R,
) -> StepTrace {
    let n = world.len();
    let snapshot: Vec<Emotion> = world.agents().iter().map(|a| a.emotion).collect();
    let identities: Vec<usize> = world.agents().iter().map(|a| a.identity).collect();

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);

    let mut trace = StepTrace {
        order: order.iter().map(|&i| AgentId(i)).collect(),
        ..Default::default()
    };
    let mut perceived: Vec<Emotion> = Vec::with_capacity(8);
    let mut errors: Vec<bool> = Vec::with_capacity(8);

    for i in order {
        let id = AgentId(i);
        let pos = world.agent(id).pos;
        let profile = world.profiles()[world.agent(id).group.0].clone();

        perceived.clear();
        errors.clear();
        for (_, occ) in world.grid().moore_neighbors(pos) {
            let Some(j) = occ else { continue };
            let shown = snapshot[j.0];
            let seen = match params.perception {
                PerceptionMode::Frozen => profile
                    .table
                    .perceive(identities[j.0], shown)
                    .expect("tables cover every identity in the world"),
                PerceptionMode::Stochastic => sample_row(profile.matrix.row(shown), rng),
            };
            perceived.push(seen);
            errors.push(seen != shown);
        }

        let trust = world.agent(id).trust;
        let trust = match params.trust_update {
            TrustUpdate::Sequential => update_trust(trust, &errors, params.alpha),
            TrustUpdate::BatchMean => update_trust_batch(trust, &errors, params.alpha),
        };
        world.agent_mut(id).trust = trust;

        let valence = compute_valence(&perceived);
        if let Some(to) = select_avoidance_move(pos, world.grid(), valence, params.tau_valence, rng) {
            let target_was_free = world.grid().is_free(to);
            world.relocate(id, to).expect("avoidance target is a free adjacent cell");
            trace.moves.push(Move {
                agent: id,
                from: pos,
                to,
                target_was_free,
            });
        }

        let agent = world.agent(id);
        let frustrated = frustration_switch(agent, params.tau_sad);
        let next = if agent.trust < params.tau_sad {
            trace.frustrated.push(id);
            frustrated
        } else {
            match contagion_candidate(&perceived, params.tau_contagion) {
                Some(c) if hysteresis_allows(&agent.history, c, params.hysteresis_max) => {
                    if c != agent.emotion {
                        trace.adopted.push((id, c));
                    }
                    c
                }
                _ => agent.emotion,
            }
        };
        let agent = world.agent_mut(id);
        agent.emotion = next;
        agent.history.push(next);
    }

    let t = world.step_count() + 1;
    if let Some(schedule) = shocks {
        trace.shocked = apply_shock(world.agents_mut(), schedule, t, rng);
    }
    world.advance_step();
    trace
}
