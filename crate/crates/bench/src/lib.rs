//! Fixtures shared by the benchmarks.

use affectgrid::{builtin_scenario, experiments, ScenarioConfig, SimRng, World};
use rand::SeedableRng;

pub fn scenario(name: &str) -> ScenarioConfig {
    builtin_scenario(name).expect("built-in scenario")
}

/// A freshly initialised world for `name` with seed 0.
pub fn fresh_world(name: &str) -> World {
    let cfg = scenario(name);
    let profiles = cfg.build_profiles().unwrap();
    experiments::init_world(&cfg, &profiles, &mut SimRng::seed_from_u64(0)).unwrap()
}
