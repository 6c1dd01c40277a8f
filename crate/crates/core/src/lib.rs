//! Agent-based simulation of emotion perception, trust and contagion on a
//! toroidal lattice.
//!
//! Agents perceive their Moore neighbors through a classifier profile (a
//! confusion matrix frozen into a per-face lookup table), track how often
//! their perception disagrees with what neighbors actually display, move
//! away from negative neighborhoods, fall into sadness when trust collapses
//! and otherwise adopt emotions that dominate their neighborhood.

pub mod agent;
pub mod dynamics;
pub mod emotion;
pub mod error;
pub mod experiments;
pub mod grid;
pub mod metrics;
pub mod output;
pub mod perception;
pub mod plot;
pub mod world;

pub use agent::{AgentState, GroupId, History};
pub use dynamics::{step, PerceptionMode, ShockSchedule, StepParams, StepTrace, TrustUpdate};
pub use emotion::{Emotion, Valence};
pub use error::{Error, Result};
pub use experiments::{
    aggregate, builtin_scenario, builtin_scenarios, init_world, resolve_scenario, run_replicates,
    run_replicates_with, run_seed_sweep, run_simulation, AggregatedSeries, Execution, RunResult, ScenarioConfig, SimRng,
};
pub use grid::{AgentId, Grid, GridPos};
pub use metrics::{ClusterSummary, EmotionCensus, TrustReport};
pub use perception::{ConfusionMatrix, PerceptionTable, ProfileSource};
pub use world::{PerceiverProfile, World};
