//! Observables computed from world snapshots.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::emotion::Emotion;
use crate::error::{Error, Result};
use crate::grid::AgentId;
use crate::world::World;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmotionCensus {
    pub step: usize,
    /// Indexed by canonical emotion order.
    pub counts: [usize; Emotion::COUNT],
}

impl EmotionCensus {
    pub fn get(&self, e: Emotion) -> usize {
        self.counts[e.index()]
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }
}

pub fn emotion_census(world: &World) -> EmotionCensus {
    let mut counts = [0; Emotion::COUNT];
    for a in world.agents() {
        counts[a.emotion.index()] += 1;
    }
    EmotionCensus {
        step: world.step_count(),
        counts,
    }
}

/// Share of the population displaying a positive emotion.
pub fn positive_ratio(census: &EmotionCensus) -> Result<f64> {
    let total = census.total();
    if total == 0 {
        return Err(Error::EmptyPopulation);
    }
    let pos: usize = Emotion::POSITIVE.iter().map(|&e| census.get(e)).sum();
    Ok(pos as f64 / total as f64)
}

/// Mean trust per perceiver profile, keyed by profile label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrustReport {
    pub step: usize,
    /// In profile order; groups without agents are reported as `None`.
    pub groups: Vec<(String, Option<f64>)>,
}

impl TrustReport {
    pub fn get(&self, label: &str) -> Option<f64> {
        self.groups.iter().find(|(l, _)| l == label).and_then(|(_, v)| *v)
    }
}

pub fn trust_by_group(world: &World) -> TrustReport {
    let profiles = world.profiles();
    let mut sums = vec![(0.0, 0usize); profiles.len()];
    for a in world.agents() {
        let s = &mut sums[a.group.0];
        s.0 += a.trust;
        s.1 += 1;
    }
    TrustReport {
        step: world.step_count(),
        groups: profiles
            .iter()
            .zip(sums)
            .map(|(p, (sum, n))| (p.label.clone(), (n > 0).then(|| sum / n as f64)))
            .collect(),
    }
}

/// Sizes of the connected components formed by agents displaying `emotion`
/// under toroidal Moore adjacency, in order of each component's
/// lowest agent id.
pub fn find_clusters(world: &World, emotion: Emotion) -> Vec<usize> {
    let grid = world.grid();
    let agents = world.agents();
    let mut seen = vec![false; agents.len()];
    let mut sizes = Vec::new();
    let mut stack: Vec<AgentId> = Vec::new();
    for start in agents.iter().filter(|a| a.emotion == emotion) {
        if seen[start.id.0] {
            continue;
        }
        seen[start.id.0] = true;
        stack.push(start.id);
        let mut size = 0;
        while let Some(id) = stack.pop() {
            size += 1;
            for (_, occ) in grid.moore_neighbors(agents[id.0].pos) {
                if let Some(j) = occ {
                    if !seen[j.0] && agents[j.0].emotion == emotion {
                        seen[j.0] = true;
                        stack.push(j);
                    }
                }
            }
        }
        sizes.push(size);
    }
    sizes
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSummary {
    pub emotion: Emotion,
    pub num_clusters: f64,
    pub avg_size: f64,
    pub max_size: f64,
    /// Runs in which the emotion was present; the denominator of the
    /// averages.
    pub runs_present: usize,
}

/// Per-emotion cluster statistics averaged over the runs in which the
/// emotion occurs. Emotions absent from every run are omitted.
pub fn cluster_summary<'a>(worlds: impl IntoIterator<Item = &'a World>) -> Vec<ClusterSummary> {
    let mut acc: BTreeMap<Emotion, (f64, f64, f64, usize)> = BTreeMap::new();
    for w in worlds {
        for e in Emotion::ALL {
            let sizes = find_clusters(w, e);
            if sizes.is_empty() {
                continue;
            }
            let num = sizes.len() as f64;
            let mean = sizes.iter().sum::<usize>() as f64 / num;
            let max = *sizes.iter().max().unwrap() as f64;
            let entry = acc.entry(e).or_insert((0.0, 0.0, 0.0, 0));
            entry.0 += num;
            entry.1 += mean;
            entry.2 += max;
            entry.3 += 1;
        }
    }
    acc.into_iter()
        .map(|(emotion, (num, mean, max, runs))| {
            let r = runs as f64;
            ClusterSummary {
                emotion,
                num_clusters: num / r,
                avg_size: mean / r,
                max_size: max / r,
                runs_present: runs,
            }
        })
        .collect()
}
