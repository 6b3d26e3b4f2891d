//! Experiment orchestration: build the scenario a config describes, run
//! the offline stage once, replay every policy over a shared sequence of
//! realized events, and aggregate the results.
//!
//! Stream labels are fixed so every result is reproducible from the master
//! seed alone: `gen/task` and `gen/cloud` feed the generators, `plan_a`
//! (with children `risk` and `crn`) feeds the offline stage, and event `k`
//! draws its realization from `event:{k}` and its random baseline from
//! `event:{k}/random`.

mod config;
mod report;

pub use config::{build_scenario, CloudSection, Config, OutputSection, TaskSection};
pub use report::{
    aggregate, csv_string, csv_without_timing, read_report, write_results, EventRow, PolicyReport,
    RunReport, RunSummary, CSV_HEADER,
};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{Scenario, Topology};
use crate::scheduler::{plan_a, run_policy, PlanAResult, Policy};
use crate::stochastic::{realize, RngStream};

/// Validates the config, generates the scenario, and validates that too.
/// All violations are reported together.
pub fn prepare_scenario(cfg: &Config) -> Result<Scenario> {
    let violations = cfg.validate();
    if !violations.is_empty() {
        return Err(Error::InvalidScenario(violations));
    }
    let scenario = build_scenario(cfg)?;
    let violations = scenario.validate();
    if !violations.is_empty() {
        return Err(Error::InvalidScenario(violations));
    }
    Ok(scenario)
}

/// Runs the full experiment described by the config.
///
/// The offline stage runs once (when any configured policy wants it), then
/// every event is realized and handed to each policy in the configured
/// order. Events are evaluated in parallel unless `timed` asks for the
/// sequential loop that makes decision timings trustworthy.
pub fn run_experiment(cfg: &Config) -> Result<RunSummary> {
    run_experiment_with_plan(cfg, None)
}

/// As [`run_experiment`], but a previously computed offline plan can be
/// supplied instead of recomputing it.
pub fn run_experiment_with_plan(cfg: &Config, plan: Option<PlanAResult>) -> Result<RunSummary> {
    let scenario = prepare_scenario(cfg)?;
    let plan = match plan {
        Some(p) => Some(p),
        None => {
            if cfg.policies.contains(&Policy::Swats) {
                let stream = RngStream::new(cfg.master_seed, "plan_a");
                Some(plan_a(&scenario, cfg.n_mc_samples, &stream)?)
            } else {
                None
            }
        }
    };
    let alpha = plan.as_ref().and_then(|p| p.alpha.as_ref());

    let run_event = |event: usize| -> Vec<EventRow> {
        let event_stream = RngStream::new(cfg.master_seed, format!("event:{event}"));
        let real = realize(&scenario, &event_stream);
        let random_stream = event_stream.child("random");
        cfg.policies
            .iter()
            .map(|&policy| {
                let decision = run_policy(policy, alpha, &scenario, &real, &random_stream);
                EventRow::from_decision(event, policy, &decision)
            })
            .collect()
    };

    let events: Vec<EventRow> = if cfg.timed {
        (1..=cfg.n_events).flat_map(run_event).collect()
    } else {
        (1..=cfg.n_events)
            .into_par_iter()
            .map(run_event)
            .reduce(Vec::new, |mut acc, mut rows| {
                acc.append(&mut rows);
                acc
            })
    };

    let report = RunReport {
        master_seed: cfg.master_seed,
        n_events: cfg.n_events,
        n_mc_samples: cfg.n_mc_samples,
        timed: cfg.timed,
        topology: scenario.task.topology_tag,
        n_subtasks: scenario.task.n_subtasks(),
        n_vehicles: scenario.cloud.n_vehicles(),
        scenario_digest: scenario.digest(),
        plan_a: plan,
        policies: aggregate(&cfg.policies, &events, cfg.n_events),
    };
    Ok(RunSummary { report, events })
}

/// A persisted offline plan, bound to the scenario it was computed for by
/// content digest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaDocument {
    pub scenario_digest: String,
    pub plan: PlanAResult,
}

impl AlphaDocument {
    pub fn new(scenario: &Scenario, plan: PlanAResult) -> Self {
        Self {
            scenario_digest: scenario.digest(),
            plan,
        }
    }

    /// Errors unless the document was computed for exactly this scenario.
    pub fn verify(&self, scenario: &Scenario) -> Result<()> {
        let digest = scenario.digest();
        if self.scenario_digest != digest {
            return Err(Error::AlphaMismatch(format!(
                "plan was computed for scenario {} but this run generates {digest}",
                self.scenario_digest
            )));
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut json = serde_json::to_string_pretty(self).expect("plan serialization is infallible");
        json.push('\n');
        std::fs::write(path, json).map_err(|source| Error::Io {
            action: "write plan",
            path: path.display().to_string(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            action: "read plan",
            path: path.display().to_string(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|e| Error::Parse {
            what: "plan JSON",
            detail: e.to_string(),
        })
    }
}

/// What a sweep varies between points.
#[derive(Debug, Clone, PartialEq)]
pub enum SweepAxis {
    Vehicles(Vec<usize>),
    Topologies(Vec<Topology>),
}

/// One sweep point: the varied value and the completed run.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub label: String,
    pub summary: RunSummary,
}

/// Runs the experiment once per point on the axis, holding everything else
/// (including the master seed) fixed.
pub fn sweep(cfg: &Config, axis: &SweepAxis) -> Result<Vec<SweepPoint>> {
    let mut points = Vec::new();
    match axis {
        SweepAxis::Vehicles(counts) => {
            if counts.is_empty() {
                return Err(Error::Config("sweep needs at least one vehicle count".into()));
            }
            for &n in counts {
                let mut point_cfg = cfg.clone();
                point_cfg.cloud.n_vehicles = n;
                points.push(SweepPoint {
                    label: format!("vehicles={n}"),
                    summary: run_experiment(&point_cfg)?,
                });
            }
        }
        SweepAxis::Topologies(topologies) => {
            if topologies.is_empty() {
                return Err(Error::Config("sweep needs at least one topology".into()));
            }
            for &t in topologies {
                let mut point_cfg = cfg.clone();
                point_cfg.task.topology = t;
                points.push(SweepPoint {
                    label: format!("topology={t}"),
                    summary: run_experiment(&point_cfg)?,
                });
            }
        }
    }
    Ok(points)
}
