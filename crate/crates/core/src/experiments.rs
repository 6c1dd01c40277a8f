//! Scenario configuration, world construction and replicate orchestration.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::agent::GroupId;
use crate::dynamics::{self, ShockSchedule, StepParams, StepTrace};
use crate::emotion::Emotion;
use crate::error::{Error, Result};
use crate::metrics::{self, ClusterSummary, EmotionCensus, TrustReport};
use crate::perception::{PerceptionTable, ProfileSource};
use crate::world::{PerceiverProfile, World};

/// The random number generator used everywhere in a run.
pub type SimRng = ChaCha8Rng;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupSpec {
    pub profile: String,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum InitialEmotions {
    #[default]
    Uniform,
    Fixed {
        emotion: Emotion,
    },
    /// Relative weights; missing emotions get weight zero.
    Weighted {
        weights: BTreeMap<Emotion, f64>,
    },
}

impl InitialEmotions {
    fn validate(&self) -> Result<()> {
        if let InitialEmotions::Weighted { weights } = self {
            if weights.values().any(|w| !w.is_finite() || *w < 0.0) {
                return Err(Error::InvalidParameter("initial emotion weights must be non-negative".into()));
            }
            if weights.values().sum::<f64>() <= 0.0 {
                return Err(Error::InvalidParameter("initial emotion weights sum to zero".into()));
            }
        }
        Ok(())
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Emotion {
        match self {
            InitialEmotions::Uniform => *Emotion::ALL.choose(rng).unwrap(),
            InitialEmotions::Fixed { emotion } => *emotion,
            InitialEmotions::Weighted { weights } => {
                let total: f64 = weights.values().sum();
                let mut row = [0.0; Emotion::COUNT];
                for (e, w) in weights {
                    row[e.index()] = w / total;
                }
                crate::perception::sample_row(&row, rng)
            }
        }
    }
}

fn default_dim() -> usize {
    9
}
fn default_steps() -> usize {
    100
}
fn default_replicates() -> usize {
    10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    #[serde(default = "default_dim")]
    pub width: usize,
    #[serde(default = "default_dim")]
    pub height: usize,
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default)]
    pub seed: u64,
    pub composition: Vec<GroupSpec>,
    #[serde(default)]
    pub initial_emotions: InitialEmotions,
    #[serde(default)]
    pub params: StepParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shocks: Option<ShockSchedule>,
    /// Overrides for profile labels; unlisted labels fall back to the
    /// built-in profiles.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub profiles: BTreeMap<String, ProfileSource>,
    /// Directory that relative matrix paths resolve against.
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

impl ScenarioConfig {
    /// A single-group scenario with default parameters.
    pub fn homogeneous(name: impl Into<String>, profile: impl Into<String>, count: usize) -> Self {
        ScenarioConfig {
            name: name.into(),
            description: String::new(),
            width: default_dim(),
            height: default_dim(),
            steps: default_steps(),
            replicates: default_replicates(),
            seed: 0,
            composition: vec![GroupSpec {
                profile: profile.into(),
                count,
            }],
            initial_emotions: InitialEmotions::Uniform,
            params: StepParams::default(),
            shocks: None,
            profiles: BTreeMap::new(),
            base_dir: None,
        }
    }

    pub fn population(&self) -> usize {
        self.composition.iter().map(|g| g.count).sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.composition.is_empty() || self.population() == 0 {
            return Err(Error::InvalidParameter("scenario has no agents".into()));
        }
        let mut labels: Vec<_> = self.composition.iter().map(|g| &g.profile).collect();
        labels.sort();
        labels.dedup();
        if labels.len() != self.composition.len() {
            return Err(Error::InvalidParameter("profile listed twice in composition".into()));
        }
        if self.replicates == 0 {
            return Err(Error::InvalidParameter("replicates must be at least 1".into()));
        }
        self.params.validate()?;
        if let Some(s) = &self.shocks {
            s.validate()?;
        }
        self.initial_emotions.validate()?;
        for g in &self.composition {
            self.profile_source(&g.profile)?;
        }
        Ok(())
    }

    fn profile_source(&self, label: &str) -> Result<ProfileSource> {
        self.profiles
            .get(label)
            .cloned()
            .or_else(|| ProfileSource::builtin(label))
            .ok_or_else(|| Error::UnknownProfile(label.to_string()))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("scenario config serialises")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf);
        Ok(cfg)
    }

    /// Resolves each composition group to a perceiver profile. Perception
    /// tables depend only on the master seed and the profile label, so all
    /// replicates of a scenario share the same classifiers.
    pub fn build_profiles(&self) -> Result<Vec<Arc<PerceiverProfile>>> {
        let n = self.population();
        self.composition
            .iter()
            .map(|g| {
                let source = self.profile_source(&g.profile)?;
                let matrix = source.resolve(&g.profile, self.base_dir.as_deref())?;
                let mut rng = SimRng::seed_from_u64(table_seed(self.seed, &g.profile));
                let table = PerceptionTable::build(&matrix, n, &mut rng);
                Ok(Arc::new(PerceiverProfile::new(matrix, table)))
            })
            .collect()
    }
}

/// SplitMix64 finaliser.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

const RUN_DOMAIN: u64 = 0x5255_4E5F_5345_4544;
const TABLE_DOMAIN: u64 = 0x5441_424C_455F_5345;

pub fn run_seed(master: u64, run_index: usize) -> u64 {
    mix64(master ^ mix64(run_index as u64 ^ RUN_DOMAIN))
}

pub fn table_seed(master: u64, label: &str) -> u64 {
    // FNV-1a, stable across platforms and releases
    let h = label
        .bytes()
        .fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3));
    mix64(master ^ mix64(h ^ TABLE_DOMAIN))
}

/// Places the population on distinct uniformly random cells with initial
/// emotions drawn from the configured distribution. Identities are assigned
/// in composition order.
pub fn init_world<R: Rng + ?Sized>(
    cfg: &ScenarioConfig,
    profiles: &[Arc<PerceiverProfile>],
    rng: &mut R,
) -> Result<World> {
    let n = cfg.population();
    let cells = cfg.width * cfg.height;
    if n > cells {
        return Err(Error::InfeasiblePlacement { agents: n, cells });
    }
    let mut world = World::new(cfg.width, cfg.height, profiles.to_vec())?;
    let mut free: Vec<_> = world.grid().cells().collect();
    free.shuffle(rng);
    let mut identity = 0;
    for (g, spec) in cfg.composition.iter().enumerate() {
        for _ in 0..spec.count {
            let emotion = cfg.initial_emotions.sample(rng);
            world.add_agent(GroupId(g), identity, emotion, free[identity], cfg.params.history_len)?;
            identity += 1;
        }
    }
    Ok(world)
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub master_seed: u64,
    pub run_index: usize,
    pub seed: u64,
    /// One entry per recorded step, starting at step 0.
    pub census: Vec<EmotionCensus>,
    pub trust: Vec<TrustReport>,
    pub positive_ratio: Vec<f64>,
    pub final_world: World,
}

impl RunResult {
    pub fn len(&self) -> usize {
        self.census.len()
    }

    pub fn is_empty(&self) -> bool {
        self.census.is_empty()
    }

    fn record(&mut self, world: &World) {
        let c = metrics::emotion_census(world);
        self.positive_ratio
            .push(metrics::positive_ratio(&c).expect("validated scenarios are non-empty"));
        self.census.push(c);
        self.trust.push(metrics::trust_by_group(world));
    }
}

pub fn run_simulation(cfg: &ScenarioConfig, run_index: usize) -> Result<RunResult> {
    cfg.validate()?;
    let profiles = cfg.build_profiles()?;
    run_with_profiles(cfg, &profiles, run_index, |_, _| {})
}

/// Runs one replicate, calling `observe` after every step with the world
/// and what happened during the step.
pub fn run_with_profiles<F>(
    cfg: &ScenarioConfig,
    profiles: &[Arc<PerceiverProfile>],
    run_index: usize,
    mut observe: F,
) -> Result<RunResult>
where
    F: FnMut(&World, &StepTrace),
{
    let seed = run_seed(cfg.seed, run_index);
    let mut rng = SimRng::seed_from_u64(seed);
    let mut world = init_world(cfg, profiles, &mut rng)?;
    let mut result = RunResult {
        master_seed: cfg.seed,
        run_index,
        seed,
        census: Vec::with_capacity(cfg.steps + 1),
        trust: Vec::with_capacity(cfg.steps + 1),
        positive_ratio: Vec::with_capacity(cfg.steps + 1),
        final_world: world.clone(),
    };
    result.record(&world);
    for _ in 0..cfg.steps {
        let trace = dynamics::step(&mut world, &cfg.params, cfg.shocks.as_ref(), &mut rng);
        observe(&world, &trace);
        result.record(&world);
    }
    result.final_world = world;
    Ok(result)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    #[default]
    Sequential,
    /// Run replicates on a dedicated pool with this many threads.
    Parallel(usize),
}

pub fn run_replicates(cfg: &ScenarioConfig) -> Result<Vec<RunResult>> {
    run_replicates_with(cfg, Execution::Sequential)
}

/// Runs replicates `0..cfg.replicates`. Results are ordered by run index
/// whatever the execution strategy.
pub fn run_replicates_with(cfg: &ScenarioConfig, exec: Execution) -> Result<Vec<RunResult>> {
    cfg.validate()?;
    let profiles = cfg.build_profiles()?;
    let one = |i| run_with_profiles(cfg, &profiles, i, |_, _| {});
    match exec {
        Execution::Sequential => (0..cfg.replicates).map(one).collect(),
        Execution::Parallel(threads) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads.max(1))
                .build()
                .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
            pool.install(|| (0..cfg.replicates).into_par_iter().map(one).collect())
        }
    }
}

/// One replicate (run index 0) per master seed, each with perception
/// tables drawn from its own seed. Results follow the order of `seeds`.
pub fn run_seed_sweep(cfg: &ScenarioConfig, seeds: &[u64], exec: Execution) -> Result<Vec<RunResult>> {
    cfg.validate()?;
    let one = |seed: u64| {
        let mut c = cfg.clone();
        c.seed = seed;
        let profiles = c.build_profiles()?;
        run_with_profiles(&c, &profiles, 0, |_, _| {})
    };
    match exec {
        Execution::Sequential => seeds.iter().map(|&s| one(s)).collect(),
        Execution::Parallel(threads) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads.max(1))
                .build()
                .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
            pool.install(|| seeds.par_iter().map(|&s| one(s)).collect())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateRow {
    pub step: usize,
    pub counts: [f64; Emotion::COUNT],
    pub positive_ratio: f64,
    /// Mean group trust per profile, in profile order.
    pub trust: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregatedSeries {
    pub runs: usize,
    /// (master seed, run seed) of each aggregated run, in input order.
    pub seeds: Vec<(u64, u64)>,
    pub groups: Vec<String>,
    pub rows: Vec<AggregateRow>,
    pub clusters: Vec<ClusterSummary>,
}

impl AggregatedSeries {
    pub fn last(&self) -> &AggregateRow {
        self.rows.last().expect("at least one recorded step")
    }

    pub fn final_trust(&self, label: &str) -> Option<f64> {
        let i = self.groups.iter().position(|g| g == label)?;
        self.last().trust[i]
    }

    pub fn final_count(&self, e: Emotion) -> f64 {
        self.last().counts[e.index()]
    }
}

/// Per-step means across runs, plus cluster statistics of the final worlds.
pub fn aggregate(results: &[RunResult]) -> Result<AggregatedSeries> {
    let first = results
        .first()
        .ok_or(Error::LengthMismatch { expected: 1, found: 0 })?;
    let len = first.len();
    for r in results {
        if r.len() != len || r.trust.len() != len || r.positive_ratio.len() != len {
            return Err(Error::LengthMismatch {
                expected: len,
                found: r.len(),
            });
        }
    }
    let groups: Vec<String> = first.trust[0].groups.iter().map(|(l, _)| l.clone()).collect();
    let runs = results.len() as f64;
    let rows = (0..len)
        .map(|t| {
            let mut counts = [0.0; Emotion::COUNT];
            let mut positive = 0.0;
            let mut trust = vec![(0.0, 0usize); groups.len()];
            for r in results {
                for (c, &v) in counts.iter_mut().zip(&r.census[t].counts) {
                    *c += v as f64;
                }
                positive += r.positive_ratio[t];
                for (acc, (_, v)) in trust.iter_mut().zip(&r.trust[t].groups) {
                    if let Some(v) = v {
                        acc.0 += v;
                        acc.1 += 1;
                    }
                }
            }
            AggregateRow {
                step: first.census[t].step,
                counts: counts.map(|c| c / runs),
                positive_ratio: positive / runs,
                trust: trust
                    .into_iter()
                    .map(|(s, n)| (n > 0).then(|| s / n as f64))
                    .collect(),
            }
        })
        .collect();
    Ok(AggregatedSeries {
        runs: results.len(),
        seeds: results.iter().map(|r| (r.master_seed, r.seed)).collect(),
        groups,
        rows,
        clusters: metrics::cluster_summary(results.iter().map(|r| &r.final_world)),
    })
}

const BUILTIN_FILES: [(&str, &str); 11] = [
    ("exp1-kdef", include_str!("../scenarios/exp1-kdef.toml")),
    ("exp1-ck+", include_str!("../scenarios/exp1-ckplus.toml")),
    ("exp1-jaffe", include_str!("../scenarios/exp1-jaffe.toml")),
    ("exp2-kdef-jaffe", include_str!("../scenarios/exp2-kdef-jaffe.toml")),
    ("exp2-balanced", include_str!("../scenarios/exp2-balanced.toml")),
    ("exp2-skewed", include_str!("../scenarios/exp2-skewed.toml")),
    ("exp3-kdef", include_str!("../scenarios/exp3-kdef.toml")),
    ("exp3-ck+", include_str!("../scenarios/exp3-ckplus.toml")),
    ("exp3-jaffe", include_str!("../scenarios/exp3-jaffe.toml")),
    ("exp3-skewed", include_str!("../scenarios/exp3-skewed.toml")),
    ("exp3-dominant", include_str!("../scenarios/exp3-dominant.toml")),
];

/// The eleven shipped scenarios: three homogeneous, three mixed and five
/// shocked populations.
pub fn builtin_scenarios() -> Vec<ScenarioConfig> {
    BUILTIN_FILES
        .iter()
        .map(|(name, text)| {
            let cfg = ScenarioConfig::from_toml(text).expect("built-in scenario parses");
            debug_assert_eq!(&cfg.name, name);
            cfg
        })
        .collect()
}

pub fn builtin_scenario(name: &str) -> Result<ScenarioConfig> {
    BUILTIN_FILES
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| ScenarioConfig::from_toml(text).expect("built-in scenario parses"))
        .ok_or_else(|| Error::UnknownScenario(name.to_string()))
}

/// Resolves a built-in name or a path to a scenario file.
pub fn resolve_scenario(name_or_path: &str) -> Result<ScenarioConfig> {
    match builtin_scenario(name_or_path) {
        Ok(cfg) => Ok(cfg),
        Err(_) => {
            let p = Path::new(name_or_path);
            if p.exists() || name_or_path.ends_with(".toml") {
                ScenarioConfig::load(p)
            } else {
                Err(Error::UnknownScenario(name_or_path.to_string()))
            }
        }
    }
}
