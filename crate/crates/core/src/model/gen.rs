//! Random instance generators: task graphs in three topology families and
//! Erdos-Renyi vehicular clouds augmented to connectivity.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

use super::{CloudGraph, Subtask, TaskEdge, TaskGraph, Topology, V2VEdgeParams, VehicleParams};
use crate::error::{Error, Result};

/// Nominal compute frequency used when deriving edge weights from subtask
/// attributes.
pub const DEFAULT_NOMINAL_F_GHZ: f64 = 3.0;

/// Nominal transmission rate used when deriving edge weights from subtask
/// attributes.
pub const DEFAULT_NOMINAL_R_MBPS: f64 = 6.0;

/// A closed interval sampled uniformly. Serialized as `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 2]", into = "[f64; 2]")]
pub struct Span {
    lo: f64,
    hi: f64,
}

impl Span {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !lo.is_finite() || !hi.is_finite() || lo > hi {
            return Err(Error::InvalidRange {
                name: "span".into(),
                lo,
                hi,
            });
        }
        Ok(Self { lo, hi })
    }

    /// Degenerate interval holding a single value.
    pub fn fixed(value: f64) -> Result<Self> {
        Self::new(value, value)
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }

    pub fn sample(&self, rng: &mut impl Rng) -> f64 {
        if self.lo == self.hi {
            self.lo
        } else {
            rng.gen_range(self.lo..=self.hi)
        }
    }
}

impl TryFrom<[f64; 2]> for Span {
    type Error = Error;

    fn try_from(v: [f64; 2]) -> Result<Self> {
        Span::new(v[0], v[1])
    }
}

impl From<Span> for [f64; 2] {
    fn from(s: Span) -> Self {
        [s.lo, s.hi]
    }
}

/// Uniform ranges for generated subtask attributes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TaskAttrRanges {
    pub data_size_mb: Span,
    pub cycles_gcycles: Span,
    pub tolerable_time_s: Span,
}

impl Default for TaskAttrRanges {
    fn default() -> Self {
        Self {
            data_size_mb: Span { lo: 1.0, hi: 2.0 },
            cycles_gcycles: Span { lo: 0.5, hi: 2.0 },
            tolerable_time_s: Span { lo: 1.5, hi: 3.0 },
        }
    }
}

/// Uniform ranges for generated vehicle and contact parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CloudParamRanges {
    pub f_mean_ghz: Span,
    pub f_var_ghz2: Span,
    pub r_mean_mbps: Span,
    pub r_var_mbps2: Span,
    pub t_mean_s: Span,
    pub c_mean: Span,
    pub c_var: Span,
}

impl Default for CloudParamRanges {
    fn default() -> Self {
        Self {
            f_mean_ghz: Span { lo: 2.0, hi: 4.0 },
            f_var_ghz2: Span { lo: 0.04, hi: 0.07 },
            r_mean_mbps: Span { lo: 5.0, hi: 7.0 },
            r_var_mbps2: Span { lo: 0.55, hi: 0.55 },
            t_mean_s: Span { lo: 5.0, hi: 16.0 },
            c_mean: Span { lo: 0.03, hi: 0.07 },
            c_var: Span { lo: 0.001, hi: 0.001 },
        }
    }
}

/// Rule for collapsing the two endpoint completion times into one edge
/// weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum WeightRule {
    #[default]
    Min,
    Max,
}

fn min_subtasks(topology: Topology) -> usize {
    match topology {
        Topology::Star => 2,
        Topology::Ring | Topology::Tadpole => 3,
        Topology::Custom => 1,
    }
}

/// Generates a task graph of the given topology with attributes drawn
/// uniformly from `ranges`, and edge weights derived with the default rule
/// and nominal resources.
pub fn gen_task(
    topology: Topology,
    n_subtasks: usize,
    ranges: &TaskAttrRanges,
    rng_seed: u64,
) -> Result<TaskGraph> {
    if topology == Topology::Custom {
        return Err(Error::InvalidGenArg(
            "custom topology has no generator; build the graph directly".into(),
        ));
    }
    let min = min_subtasks(topology);
    if n_subtasks < min {
        return Err(Error::TooFewSubtasks {
            topology: match topology {
                Topology::Star => "star",
                Topology::Ring => "ring",
                Topology::Tadpole => "tadpole",
                Topology::Custom => "custom",
            },
            min,
            got: n_subtasks,
        });
    }
    for (name, span, allow_zero) in [
        ("data_size_mb", ranges.data_size_mb, true),
        ("cycles_gcycles", ranges.cycles_gcycles, true),
        ("tolerable_time_s", ranges.tolerable_time_s, false),
    ] {
        let floor = if allow_zero { 0.0 } else { f64::MIN_POSITIVE };
        if span.lo < floor {
            return Err(Error::InvalidRange {
                name: name.into(),
                lo: span.lo,
                hi: span.hi,
            });
        }
    }

    let mut rng = ChaCha12Rng::seed_from_u64(rng_seed);
    let subtasks: Vec<Subtask> = (0..n_subtasks)
        .map(|id| {
            let data_size_mb = ranges.data_size_mb.sample(&mut rng);
            let cycles_gcycles = ranges.cycles_gcycles.sample(&mut rng);
            let tolerable_time_s = ranges.tolerable_time_s.sample(&mut rng);
            Subtask {
                id,
                tolerable_time_s,
                data_size_mb,
                cycles_gcycles,
            }
        })
        .collect();

    let pairs = topology_edges(topology, n_subtasks);
    let edges = pairs
        .into_iter()
        .map(|(u, v)| TaskEdge { u, v, weight_s: 0.0 })
        .collect();
    let skeleton = TaskGraph::new(subtasks, edges, topology)?;
    derive_edge_weights(&skeleton, DEFAULT_NOMINAL_F_GHZ, DEFAULT_NOMINAL_R_MBPS)
}

fn topology_edges(topology: Topology, n: usize) -> Vec<(usize, usize)> {
    match topology {
        Topology::Star => (1..n).map(|i| (0, i)).collect(),
        Topology::Ring => (0..n).map(|i| (i, (i + 1) % n)).collect(),
        Topology::Tadpole => {
            // Cycle on roughly half the vertices (at least 3), with the rest
            // forming a path hanging off vertex 0.
            let cycle = (n.div_ceil(2)).max(3);
            let mut edges: Vec<(usize, usize)> = (0..cycle).map(|i| (i, (i + 1) % cycle)).collect();
            for i in cycle..n {
                let prev = if i == cycle { 0 } else { i - 1 };
                edges.push((prev, i));
            }
            edges
        }
        Topology::Custom => unreachable!("rejected before structure generation"),
    }
}

/// Recomputes every edge weight from the endpoint subtasks' nominal
/// completion times using the default (min) rule. Returns a copy.
pub fn derive_edge_weights(
    task: &TaskGraph,
    nominal_f_ghz: f64,
    nominal_r_mbps: f64,
) -> Result<TaskGraph> {
    derive_edge_weights_with(task, nominal_f_ghz, nominal_r_mbps, WeightRule::Min)
}

/// As [`derive_edge_weights`] with an explicit combination rule.
///
/// The nominal completion time of subtask i is
/// `data_size_mb / nominal_r_mbps + cycles_gcycles / nominal_f_ghz`; an
/// edge's weight is the min (or max) of its endpoints' times.
pub fn derive_edge_weights_with(
    task: &TaskGraph,
    nominal_f_ghz: f64,
    nominal_r_mbps: f64,
    rule: WeightRule,
) -> Result<TaskGraph> {
    if nominal_f_ghz <= 0.0 || !nominal_f_ghz.is_finite() {
        return Err(Error::InvalidGenArg(format!(
            "nominal_f_ghz must be positive, got {nominal_f_ghz}"
        )));
    }
    if nominal_r_mbps <= 0.0 || !nominal_r_mbps.is_finite() {
        return Err(Error::InvalidGenArg(format!(
            "nominal_r_mbps must be positive, got {nominal_r_mbps}"
        )));
    }
    let times: Vec<f64> = task
        .subtasks
        .iter()
        .map(|st| st.data_size_mb / nominal_r_mbps + st.cycles_gcycles / nominal_f_ghz)
        .collect();
    let mut out = task.clone();
    for e in &mut out.edges {
        let (tu, tv) = (times[e.u], times[e.v]);
        e.weight_s = match rule {
            WeightRule::Min => tu.min(tv),
            WeightRule::Max => tu.max(tv),
        };
    }
    Ok(out)
}

/// Generates a vehicular cloud: Erdos-Renyi contacts with probability
/// `connectivity_p`, unioned with a random spanning tree so the cloud is
/// always connected, and parameters drawn uniformly from `ranges`.
pub fn gen_cloud(
    n_vehicles: usize,
    connectivity_p: f64,
    ranges: &CloudParamRanges,
    rng_seed: u64,
) -> Result<CloudGraph> {
    if n_vehicles == 0 {
        return Err(Error::InvalidGenArg("n_vehicles must be at least 1".into()));
    }
    if !(connectivity_p > 0.0 && connectivity_p <= 1.0) {
        return Err(Error::InvalidGenArg(format!(
            "connectivity_p must lie in (0, 1], got {connectivity_p}"
        )));
    }
    for (name, span) in [
        ("f_mean_ghz", ranges.f_mean_ghz),
        ("f_var_ghz2", ranges.f_var_ghz2),
        ("r_mean_mbps", ranges.r_mean_mbps),
        ("r_var_mbps2", ranges.r_var_mbps2),
        ("t_mean_s", ranges.t_mean_s),
        ("c_mean", ranges.c_mean),
        ("c_var", ranges.c_var),
    ] {
        if span.lo <= 0.0 {
            return Err(Error::InvalidRange {
                name: name.into(),
                lo: span.lo,
                hi: span.hi,
            });
        }
    }

    let mut rng = ChaCha12Rng::seed_from_u64(rng_seed);
    let n = n_vehicles;
    let mut pairs: BTreeSet<(usize, usize)> = BTreeSet::new();
    for a in 0..n {
        for b in (a + 1)..n {
            if rng.gen_bool(connectivity_p) {
                pairs.insert((a, b));
            }
        }
    }
    if n > 1 {
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);
        for i in 1..n {
            let j = rng.gen_range(0..i);
            let (a, b) = (perm[i].min(perm[j]), perm[i].max(perm[j]));
            pairs.insert((a, b));
        }
    }

    let vehicles: Vec<VehicleParams> = (0..n)
        .map(|id| {
            let f_mean_ghz = ranges.f_mean_ghz.sample(&mut rng);
            let f_var_ghz2 = ranges.f_var_ghz2.sample(&mut rng);
            let r_mean_mbps = ranges.r_mean_mbps.sample(&mut rng);
            let r_var_mbps2 = ranges.r_var_mbps2.sample(&mut rng);
            VehicleParams {
                id,
                f_mean_ghz,
                f_var_ghz2,
                r_mean_mbps,
                r_var_mbps2,
            }
        })
        .collect();
    let edges: Vec<V2VEdgeParams> = pairs
        .into_iter()
        .map(|(a, b)| {
            let t_mean_s = ranges.t_mean_s.sample(&mut rng);
            let c_mean = ranges.c_mean.sample(&mut rng);
            let c_var = ranges.c_var.sample(&mut rng);
            V2VEdgeParams {
                a,
                b,
                t_mean_s,
                c_mean,
                c_var,
            }
        })
        .collect();
    CloudGraph::new(vehicles, edges)
}
