//! Stage-wise scheduling of graph-structured tasks onto a stochastic
//! vehicular cloud.
//!
//! A task is an undirected weighted graph of subtasks; the cloud is a graph
//! of vehicles whose compute frequency, transmission rate, contact
//! durations, and exchange costs are random. Scheduling happens in two
//! stages: an offline plan picks the expected-cost-optimal mapping among
//! those meeting two chance constraints (deadline risk and structure risk),
//! and an online stage keeps that mapping when the realized draw supports
//! it, falling back to a pruned search otherwise. The simulation harness
//! replays event sequences under this policy and five baselines, reporting
//! average realized cost, average response time, and completion rates.
//!
//! Modules follow the pipeline: [`model`] holds the graph and scenario
//! types plus generators, [`stochastic`] the distributions and Monte Carlo
//! machinery, [`feasibility`] the per-mapping checks and risks, [`search`]
//! the mapping enumeration, [`scheduler`] the two planning stages and
//! baseline policies, and [`harness`] configuration, experiment execution,
//! and reporting.

pub mod error;
pub mod feasibility;
pub mod harness;
pub mod model;
pub mod scheduler;
pub mod search;
pub mod stochastic;

pub use error::{Error, Result};
pub use feasibility::{
    deterministic_feasible, realized_cost, risk_deadline, risk_feasible, risk_structure,
    structural_ok, CostBreakdown, Mapping, RiskReport,
};
pub use harness::{
    build_scenario, csv_without_timing, prepare_scenario, run_experiment, run_experiment_with_plan,
    sweep, AlphaDocument, Config, EventRow, PolicyReport, RunReport, RunSummary, SweepAxis,
    SweepPoint,
};
pub use model::{
    derive_edge_weights, gen_cloud, gen_task, validate_scenario, ClipBounds, CloudGraph, Realization,
    Scenario, Subtask, TaskEdge, TaskGraph, Topology, V2VEdgeParams, VehicleParams,
};
pub use scheduler::{
    plan_a, plan_b, run_policy, DecisionKind, EventDecision, PlanAResult, Policy,
};
pub use search::{
    enumerate_feasible, exhaustive, greedy_degpref, greedy_timepref, random_mapping, AcceptAll,
    MappingPredicate, SearchStats,
};
pub use stochastic::{
    cdf_contact_below, draw_realizations, mc_expectation, realize, McEstimate, RngStream,
    TruncExponential, TruncGaussian,
};
