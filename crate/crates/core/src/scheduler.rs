//! The two-stage policy: offline chance-constrained planning (Plan A),
//! online feasibility checking with search fallback (Plan B), and the
//! baseline policies they are measured against.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::feasibility::{
    cost_indexed, deterministic_feasible_indexed, subtask_time, CostBreakdown, Mapping, RiskReport,
};
use crate::model::{CloudIndex, Realization, Risk1Mode, Scenario};
use crate::search::{
    enumerate_feasible, exhaustive, greedy_degpref, greedy_timepref, random_mapping,
    MappingPredicate,
};
use crate::stochastic::{cdf_contact_below, draw_realizations, RngStream, TruncExponential};

/// The scheduling policies the harness can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Policy {
    /// Plan A's mapping when it survives the online check, Plan B otherwise.
    #[serde(rename = "SWATS")]
    Swats,
    /// Pure online search on every event.
    #[serde(rename = "Onsite")]
    Onsite,
    /// Uniformly random injective mapping.
    #[serde(rename = "Random")]
    Random,
    /// Greedy by realized completion time.
    #[serde(rename = "TimePref")]
    TimePref,
    /// Greedy by vertex degree.
    #[serde(rename = "DegreePref")]
    DegreePref,
    /// Unpruned exhaustive argmin.
    #[serde(rename = "ExSearch")]
    ExSearch,
}

impl Policy {
    pub const ALL: [Policy; 6] = [
        Policy::Swats,
        Policy::Onsite,
        Policy::Random,
        Policy::TimePref,
        Policy::DegreePref,
        Policy::ExSearch,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Policy::Swats => "SWATS",
            Policy::Onsite => "Onsite",
            Policy::Random => "Random",
            Policy::TimePref => "TimePref",
            Policy::DegreePref => "DegreePref",
            Policy::ExSearch => "ExSearch",
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Policy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "swats" => Ok(Policy::Swats),
            "onsite" => Ok(Policy::Onsite),
            "random" => Ok(Policy::Random),
            "timepref" => Ok(Policy::TimePref),
            "degreepref" => Ok(Policy::DegreePref),
            "exsearch" => Ok(Policy::ExSearch),
            other => Err(Error::UnknownPolicy(other.to_string())),
        }
    }
}

/// Which arm produced an event's mapping.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecisionKind {
    /// The offline mapping passed the online check.
    Alpha,
    /// A mapping found (or constructed) online.
    Beta,
    /// No usable mapping this event.
    Failed,
}

impl fmt::Display for DecisionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            DecisionKind::Alpha => "alpha",
            DecisionKind::Beta => "beta",
            DecisionKind::Failed => "failed",
        };
        f.write_str(name)
    }
}

/// Outcome of one policy decision on one event.
///
/// `used` is `Alpha` or `Beta` exactly when `mapping` and `cost` are
/// present; `decision_time_s` covers the decision work only (checks and
/// search), not bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct EventDecision {
    pub used: DecisionKind,
    pub mapping: Option<Mapping>,
    pub cost: Option<CostBreakdown>,
    pub decision_time_s: f64,
}

/// Output of the offline planning stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanAResult {
    /// The chance-constrained expected-cost argmin, if any candidate
    /// satisfies both risk thresholds.
    pub alpha: Option<Mapping>,
    pub expected_f: Option<f64>,
    pub risk_report: Option<RiskReport>,
    pub offline_time_s: f64,
    pub candidates_considered: u64,
}

/// Deterministic per-realization feasibility, factored into the search
/// predicate layers: per-vertex deadline checks and per-edge contact
/// checks. Together with the structural search these encode exactly
/// [`crate::feasibility::deterministic_feasible`].
pub struct DeterministicPredicate {
    nv: usize,
    ne_cloud: usize,
    vertex_pass: Vec<bool>,
    edge_pass: Vec<bool>,
}

impl DeterministicPredicate {
    pub fn new(s: &Scenario, real: &Realization) -> Self {
        let n = s.task.n_subtasks();
        let nv = s.cloud.n_vehicles();
        let ne_cloud = s.cloud.edges.len();
        let mut vertex_pass = vec![false; n * nv];
        for i in 0..n {
            let tau = s.task.subtasks[i].tolerable_time_s;
            for a in 0..nv {
                vertex_pass[i * nv + a] = subtask_time(s, real, i, a) <= tau;
            }
        }
        let mut edge_pass = vec![false; s.task.edges.len() * ne_cloud];
        for (te, e) in s.task.edges.iter().enumerate() {
            for ce in 0..ne_cloud {
                edge_pass[te * ne_cloud + ce] = real.t[ce] >= e.weight_s;
            }
        }
        Self {
            nv,
            ne_cloud,
            vertex_pass,
            edge_pass,
        }
    }
}

impl MappingPredicate for DeterministicPredicate {
    fn vertex_ok(&self, subtask: usize, vehicle: usize) -> bool {
        self.vertex_pass[subtask * self.nv + vehicle]
    }

    fn edge_ok(&self, task_edge: usize, cloud_edge: usize) -> bool {
        self.edge_pass[task_edge * self.ne_cloud + cloud_edge]
    }
}

/// Chance-constraint predicate for the offline search.
///
/// Deadline misses are precomputed per (subtask, vehicle) as bitsets over
/// the risk sample batch, so the joint deadline risk of a complete mapping
/// is an OR plus a popcount. Structure risk is analytic per edge pair. The
/// vertex and edge layers prune on single-component risks, which never
/// exceed the joint risks, so pruning is sound.
pub struct RiskPredicate {
    eps1: f64,
    eps2: f64,
    n_samples: usize,
    nv: usize,
    ne_cloud: usize,
    risk1_mode: Risk1Mode,
    n_blocks: usize,
    /// Bitset per (subtask, vehicle): sample k set when the deadline is
    /// missed there.
    miss_masks: Vec<u64>,
    miss_prob: Vec<f64>,
    /// Analytic shortfall probability per (task edge, cloud edge).
    edge_risk: Vec<f64>,
    index: CloudIndex,
    task_edges: Vec<(usize, usize)>,
}

impl RiskPredicate {
    pub fn new(s: &Scenario, risk_samples: &[Realization]) -> Result<Self> {
        let n_samples = risk_samples.len();
        if n_samples == 0 {
            return Err(Error::NoSamples);
        }
        let n = s.task.n_subtasks();
        let nv = s.cloud.n_vehicles();
        let ne_cloud = s.cloud.edges.len();
        let n_blocks = n_samples.div_ceil(64);

        let mut miss_masks = vec![0u64; n * nv * n_blocks];
        for (k, real) in risk_samples.iter().enumerate() {
            let (block, bit) = (k / 64, k % 64);
            for i in 0..n {
                let tau = s.task.subtasks[i].tolerable_time_s;
                for a in 0..nv {
                    if subtask_time(s, real, i, a) > tau {
                        miss_masks[(i * nv + a) * n_blocks + block] |= 1 << bit;
                    }
                }
            }
        }
        let miss_prob: Vec<f64> = (0..n * nv)
            .map(|slot| {
                let words = &miss_masks[slot * n_blocks..(slot + 1) * n_blocks];
                let hits: u32 = words.iter().map(|w| w.count_ones()).sum();
                hits as f64 / n_samples as f64
            })
            .collect();

        let mut edge_risk = vec![0.0; s.task.edges.len() * ne_cloud];
        for (te, e) in s.task.edges.iter().enumerate() {
            for (ce, contact) in s.cloud.edges.iter().enumerate() {
                let d = TruncExponential::new(contact.t_mean_s, s.clips.t_hi_s)?;
                edge_risk[te * ne_cloud + ce] = cdf_contact_below(e.weight_s, &d)?;
            }
        }

        Ok(Self {
            eps1: s.eps1,
            eps2: s.eps2,
            n_samples,
            nv,
            ne_cloud,
            risk1_mode: s.eval.risk1,
            n_blocks,
            miss_masks,
            miss_prob,
            edge_risk,
            index: s.cloud.index(),
            task_edges: s.task.edges.iter().map(|e| (e.u, e.v)).collect(),
        })
    }

    fn mask_of(&self, subtask: usize, vehicle: usize) -> &[u64] {
        let slot = subtask * self.nv + vehicle;
        &self.miss_masks[slot * self.n_blocks..(slot + 1) * self.n_blocks]
    }

    /// Deadline risk of a complete mapping over the risk sample batch.
    pub fn risk_deadline_of(&self, m: &Mapping) -> f64 {
        match self.risk1_mode {
            Risk1Mode::Joint => {
                let mut joint = vec![0u64; self.n_blocks];
                for (i, &a) in m.as_slice().iter().enumerate() {
                    for (acc, word) in joint.iter_mut().zip(self.mask_of(i, a)) {
                        *acc |= word;
                    }
                }
                let hits: u32 = joint.iter().map(|w| w.count_ones()).sum();
                hits as f64 / self.n_samples as f64
            }
            Risk1Mode::PerSubtask => m
                .as_slice()
                .iter()
                .enumerate()
                .map(|(i, &a)| self.miss_prob[i * self.nv + a])
                .fold(0.0, f64::max),
        }
    }

    /// Analytic structure risk of a complete mapping.
    pub fn risk_structure_of(&self, m: &Mapping) -> f64 {
        let mut survive = 1.0;
        for (te, &(u, v)) in self.task_edges.iter().enumerate() {
            let ce = self
                .index
                .edge_between(m.vehicle_for(u), m.vehicle_for(v))
                .expect("search guarantees structural validity");
            survive *= 1.0 - self.edge_risk[te * self.ne_cloud + ce];
        }
        1.0 - survive
    }
}

impl MappingPredicate for RiskPredicate {
    fn vertex_ok(&self, subtask: usize, vehicle: usize) -> bool {
        self.miss_prob[subtask * self.nv + vehicle] <= self.eps1
    }

    fn edge_ok(&self, task_edge: usize, cloud_edge: usize) -> bool {
        self.edge_risk[task_edge * self.ne_cloud + cloud_edge] <= self.eps2
    }

    fn mapping_ok(&self, m: &Mapping) -> bool {
        self.risk_deadline_of(m) <= self.eps1 && self.risk_structure_of(m) <= self.eps2
    }
}

/// Offline stage: enumerate the chance-constraint-feasible mappings and
/// pick the expected-cost argmin under common random numbers.
///
/// Risk estimation draws from `stream.child("risk")`, the expectation from
/// `stream.child("crn")`; every candidate sees the same draws, so the
/// argmin is stable. Ties go to the lexicographically smallest assignment.
pub fn plan_a(s: &Scenario, n_samples: usize, stream: &RngStream) -> Result<PlanAResult> {
    if n_samples == 0 {
        return Err(Error::NoSamples);
    }
    let start = Instant::now();
    let risk_samples = draw_realizations(s, &stream.child("risk"), n_samples);
    let pred = RiskPredicate::new(s, &risk_samples)?;
    drop(risk_samples);
    let (candidates, _) = enumerate_feasible(s, &pred, None);
    if candidates.is_empty() {
        return Ok(PlanAResult {
            alpha: None,
            expected_f: None,
            risk_report: None,
            offline_time_s: start.elapsed().as_secs_f64(),
            candidates_considered: 0,
        });
    }

    let crn_samples = draw_realizations(s, &stream.child("crn"), n_samples);
    let index = s.cloud.index();
    let expected: Vec<f64> = candidates
        .par_iter()
        .map(|m| {
            let total: f64 = crn_samples
                .iter()
                .map(|real| cost_indexed(m, s, real, &index).f_value)
                .sum();
            total / n_samples as f64
        })
        .collect();
    let mut best = 0;
    for (i, &ef) in expected.iter().enumerate() {
        if ef < expected[best] {
            best = i;
        }
    }
    let alpha = candidates[best].clone();
    let report = RiskReport {
        risk_deadline: pred.risk_deadline_of(&alpha),
        risk_structure: pred.risk_structure_of(&alpha),
        feasible: true,
    };
    Ok(PlanAResult {
        alpha: Some(alpha),
        expected_f: Some(expected[best]),
        risk_report: Some(report),
        offline_time_s: start.elapsed().as_secs_f64(),
        candidates_considered: candidates.len() as u64,
    })
}

/// Online stage: keep the offline mapping when it is deterministically
/// feasible under the realized draw, otherwise search for the realized-cost
/// argmin among deterministically feasible mappings.
///
/// `decision_time_s` covers just the check when the offline mapping
/// survives, and the check plus the fallback search when it does not.
pub fn plan_b(alpha: Option<&Mapping>, s: &Scenario, real: &Realization) -> EventDecision {
    let index = s.cloud.index();
    let start = Instant::now();
    if let Some(a) = alpha {
        if deterministic_feasible_indexed(a, s, real, &index) {
            let decision_time_s = start.elapsed().as_secs_f64();
            return EventDecision {
                used: DecisionKind::Alpha,
                mapping: Some(a.clone()),
                cost: Some(cost_indexed(a, s, real, &index)),
                decision_time_s,
            };
        }
    }
    let pred = DeterministicPredicate::new(s, real);
    let (candidates, _) = enumerate_feasible(s, &pred, None);
    let mut best: Option<(f64, &Mapping)> = None;
    for m in &candidates {
        let f = cost_indexed(m, s, real, &index).f_value;
        if best.is_none_or(|(bf, _)| f < bf) {
            best = Some((f, m));
        }
    }
    let decision_time_s = start.elapsed().as_secs_f64();
    match best {
        Some((_, m)) => EventDecision {
            used: DecisionKind::Beta,
            mapping: Some(m.clone()),
            cost: Some(cost_indexed(m, s, real, &index)),
            decision_time_s,
        },
        None => EventDecision {
            used: DecisionKind::Failed,
            mapping: None,
            cost: None,
            decision_time_s,
        },
    }
}

/// Runs one policy on one realized event. `stream` feeds only the random
/// baseline; the others are deterministic given the realization.
pub fn run_policy(
    policy: Policy,
    alpha: Option<&Mapping>,
    s: &Scenario,
    real: &Realization,
    stream: &RngStream,
) -> EventDecision {
    match policy {
        Policy::Swats => plan_b(alpha, s, real),
        Policy::Onsite => plan_b(None, s, real),
        Policy::ExSearch => {
            let start = Instant::now();
            let (best, _) = exhaustive(s, real);
            let decision_time_s = start.elapsed().as_secs_f64();
            finish_constructed(best, s, real, decision_time_s)
        }
        Policy::Random => {
            let start = Instant::now();
            let m = random_mapping(s, stream);
            judge_constructed(m, s, real, start)
        }
        Policy::TimePref => {
            let start = Instant::now();
            let m = greedy_timepref(s, real);
            judge_constructed(m, s, real, start)
        }
        Policy::DegreePref => {
            let start = Instant::now();
            let m = greedy_degpref(s);
            judge_constructed(m, s, real, start)
        }
    }
}

fn judge_constructed(m: Mapping, s: &Scenario, real: &Realization, start: Instant) -> EventDecision {
    let index = s.cloud.index();
    let feasible = deterministic_feasible_indexed(&m, s, real, &index);
    let decision_time_s = start.elapsed().as_secs_f64();
    if feasible {
        EventDecision {
            used: DecisionKind::Beta,
            cost: Some(cost_indexed(&m, s, real, &index)),
            mapping: Some(m),
            decision_time_s,
        }
    } else {
        EventDecision {
            used: DecisionKind::Failed,
            mapping: None,
            cost: None,
            decision_time_s,
        }
    }
}

fn finish_constructed(
    best: Option<Mapping>,
    s: &Scenario,
    real: &Realization,
    decision_time_s: f64,
) -> EventDecision {
    match best {
        Some(m) => {
            let index = s.cloud.index();
            EventDecision {
                used: DecisionKind::Beta,
                cost: Some(cost_indexed(&m, s, real, &index)),
                mapping: Some(m),
                decision_time_s,
            }
        }
        None => EventDecision {
            used: DecisionKind::Failed,
            mapping: None,
            cost: None,
            decision_time_s,
        },
    }
}
