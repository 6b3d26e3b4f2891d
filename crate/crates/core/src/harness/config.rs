//! Experiment configuration: a declarative description of the scenario
//! generators, cost model, policies, and output locations, loadable from
//! TOML or JSON.

use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{
    derive_edge_weights_with, gen_cloud, gen_task, ClipBounds, CloudParamRanges, EvalOptions,
    Scenario, TaskAttrRanges, Topology, WeightRule, DEFAULT_NOMINAL_F_GHZ, DEFAULT_NOMINAL_R_MBPS,
};
use crate::scheduler::Policy;
use crate::stochastic::RngStream;

/// Task-side generator settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TaskSection {
    pub topology: Topology,
    pub n_subtasks: usize,
    pub attr_ranges: TaskAttrRanges,
    pub weight_rule: WeightRule,
    pub nominal_f_ghz: f64,
    pub nominal_r_mbps: f64,
}

impl Default for TaskSection {
    fn default() -> Self {
        Self {
            topology: Topology::Star,
            n_subtasks: 6,
            attr_ranges: TaskAttrRanges::default(),
            weight_rule: WeightRule::Min,
            nominal_f_ghz: DEFAULT_NOMINAL_F_GHZ,
            nominal_r_mbps: DEFAULT_NOMINAL_R_MBPS,
        }
    }
}

/// Cloud-side generator settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CloudSection {
    pub n_vehicles: usize,
    pub connectivity_p: f64,
    pub param_ranges: CloudParamRanges,
}

impl Default for CloudSection {
    fn default() -> Self {
        Self {
            n_vehicles: 8,
            connectivity_p: 0.6,
            param_ranges: CloudParamRanges::default(),
        }
    }
}

/// Where result files land when the caller asks for them to be written.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub csv_path: String,
    pub summary_path: String,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            csv_path: "results.csv".into(),
            summary_path: "summary.json".into(),
        }
    }
}

/// Full experiment configuration. Every field has a default, so an empty
/// document is a valid starting point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub master_seed: u64,
    pub n_events: usize,
    pub n_mc_samples: usize,
    /// Sequential event loop for trustworthy decision timings.
    pub timed: bool,
    pub policies: Vec<Policy>,
    pub w_time: f64,
    pub w_cost: f64,
    pub eps1: f64,
    pub eps2: f64,
    pub clips: ClipBounds,
    pub eval: EvalOptions,
    pub task: TaskSection,
    pub cloud: CloudSection,
    pub output: OutputSection,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            master_seed: 42,
            n_events: 100,
            n_mc_samples: 10_000,
            timed: false,
            policies: Policy::ALL.to_vec(),
            w_time: 0.5,
            w_cost: 0.5,
            eps1: 0.3,
            eps2: 0.3,
            clips: ClipBounds::default(),
            eval: EvalOptions::default(),
            task: TaskSection::default(),
            cloud: CloudSection::default(),
            output: OutputSection::default(),
        }
    }
}

impl Config {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse {
            what: "TOML config",
            detail: e.to_string(),
        })
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse {
            what: "JSON config",
            detail: e.to_string(),
        })
    }

    /// Loads a config file, choosing the parser by extension (`.toml` or
    /// `.json`).
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            action: "read config",
            path: path.display().to_string(),
            source,
        })?;
        match path.extension().and_then(|e| e.to_str()) {
            Some("toml") => Self::from_toml_str(&text),
            Some("json") => Self::from_json_str(&text),
            other => Err(Error::Config(format!(
                "config files must end in .toml or .json, got {:?}",
                other.unwrap_or("(none)")
            ))),
        }
    }

    /// Config-level violations, before any generation happens. Scenario
    /// validation adds the rest after generation.
    pub fn validate(&self) -> Vec<String> {
        let mut v = Vec::new();
        if self.n_events == 0 {
            v.push("n_events must be at least 1".into());
        }
        if self.n_mc_samples == 0 {
            v.push("n_mc_samples must be at least 1".into());
        }
        if self.policies.is_empty() {
            v.push("policies must not be empty".into());
        }
        let mut seen = std::collections::HashSet::new();
        for p in &self.policies {
            if !seen.insert(*p) {
                v.push(format!("policy {p} listed more than once"));
            }
        }
        let min = match self.task.topology {
            Topology::Star => 2,
            Topology::Ring | Topology::Tadpole => 3,
            Topology::Custom => usize::MAX,
        };
        if self.task.topology == Topology::Custom {
            v.push("the harness generates scenarios; topology must be star, ring, or tadpole".into());
        } else if self.task.n_subtasks < min {
            v.push(format!(
                "{} topology needs at least {min} subtasks, got {}",
                self.task.topology, self.task.n_subtasks
            ));
        }
        if self.cloud.n_vehicles < self.task.n_subtasks {
            v.push(format!(
                "need at least as many vehicles as subtasks, got {} vehicles for {} subtasks",
                self.cloud.n_vehicles, self.task.n_subtasks
            ));
        }
        if !(self.cloud.connectivity_p > 0.0 && self.cloud.connectivity_p <= 1.0) {
            v.push(format!(
                "connectivity_p must lie in (0, 1], got {}",
                self.cloud.connectivity_p
            ));
        }
        for (name, value) in [
            ("task.nominal_f_ghz", self.task.nominal_f_ghz),
            ("task.nominal_r_mbps", self.task.nominal_r_mbps),
        ] {
            if value <= 0.0 || !value.is_finite() {
                v.push(format!("{name} must be positive, got {value}"));
            }
        }
        if self.output.csv_path.is_empty() || self.output.summary_path.is_empty() {
            v.push("output paths must not be empty".into());
        }
        v
    }
}

/// Generates the scenario a config describes. Task structure comes from
/// the stream labeled `gen/task`, the cloud from `gen/cloud`, both rooted
/// at the master seed.
pub fn build_scenario(cfg: &Config) -> Result<Scenario> {
    let gen_stream = RngStream::new(cfg.master_seed, "gen");
    let task_seed = gen_stream.child("task").seed_u64();
    let cloud_seed = gen_stream.child("cloud").seed_u64();
    let task = gen_task(
        cfg.task.topology,
        cfg.task.n_subtasks,
        &cfg.task.attr_ranges,
        task_seed,
    )?;
    let task = derive_edge_weights_with(
        &task,
        cfg.task.nominal_f_ghz,
        cfg.task.nominal_r_mbps,
        cfg.task.weight_rule,
    )?;
    let cloud = gen_cloud(
        cfg.cloud.n_vehicles,
        cfg.cloud.connectivity_p,
        &cfg.cloud.param_ranges,
        cloud_seed,
    )?;
    Ok(Scenario {
        task,
        cloud,
        w_time: cfg.w_time,
        w_cost: cfg.w_cost,
        eps1: cfg.eps1,
        eps2: cfg.eps2,
        clips: cfg.clips,
        eval: cfg.eval,
    })
}
