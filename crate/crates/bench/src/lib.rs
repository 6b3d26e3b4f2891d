//! Shared fixtures for the criterion benchmarks: representative scenarios
//! built through the public config path so benchmark inputs match what the
//! harness actually runs.

use swats_core::harness::{build_scenario, Config};
use swats_core::model::{Realization, Scenario, Topology};
use swats_core::stochastic::{realize, RngStream};

/// Star scenario at the default problem size.
pub fn default_scenario() -> Scenario {
    scenario_with(Topology::Star, 6, 8)
}

/// Scenario with the given shape, sized to stay within benchmark budgets.
pub fn scenario_with(topology: Topology, n_subtasks: usize, n_vehicles: usize) -> Scenario {
    let mut cfg = Config::default();
    cfg.task.topology = topology;
    cfg.task.n_subtasks = n_subtasks;
    cfg.cloud.n_vehicles = n_vehicles;
    build_scenario(&cfg).expect("benchmark config is valid")
}

/// A fixed realized draw for the scenario.
pub fn fixed_realization(s: &Scenario) -> Realization {
    realize(s, &RngStream::new(Config::default().master_seed, "bench:event"))
}
