//! Graph-structured problem data: task graphs over subtasks, vehicular
//! cloud graphs, clip bounds, full scenarios, and realized draws.
//!
//! Vertex ids are dense indices (`0..n`), so realizations and mapping
//! vectors index by id directly. Edge lists are kept canonical: endpoints
//! ordered low-to-high, edges sorted lexicographically.

mod gen;
mod validate;

pub use gen::{
    derive_edge_weights, derive_edge_weights_with, gen_cloud, gen_task, CloudParamRanges, Span,
    TaskAttrRanges, WeightRule, DEFAULT_NOMINAL_F_GHZ, DEFAULT_NOMINAL_R_MBPS,
};
pub use validate::validate_scenario;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// One unit of work: its deadline, input payload, and compute demand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subtask {
    pub id: usize,
    pub tolerable_time_s: f64,
    pub data_size_mb: f64,
    pub cycles_gcycles: f64,
}

/// A required interaction between two subtasks, weighted by the contact
/// duration (seconds) the assigned vehicles must sustain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaskEdge {
    pub u: usize,
    pub v: usize,
    pub weight_s: f64,
}

/// Shape family of a generated task graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Topology {
    Star,
    Ring,
    Tadpole,
    Custom,
}

impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Topology::Star => "star",
            Topology::Ring => "ring",
            Topology::Tadpole => "tadpole",
            Topology::Custom => "custom",
        };
        f.write_str(name)
    }
}

impl FromStr for Topology {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "star" => Ok(Topology::Star),
            "ring" => Ok(Topology::Ring),
            "tadpole" => Ok(Topology::Tadpole),
            "custom" => Ok(Topology::Custom),
            other => Err(Error::UnknownTopology(other.to_string())),
        }
    }
}

/// An undirected weighted graph of subtasks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskGraph {
    pub subtasks: Vec<Subtask>,
    pub edges: Vec<TaskEdge>,
    pub topology_tag: Topology,
}

impl TaskGraph {
    /// Builds a task graph, canonicalizing the edge list and rejecting
    /// malformed structure (bad ids, loops, duplicates, disconnection).
    pub fn new(subtasks: Vec<Subtask>, edges: Vec<TaskEdge>, topology_tag: Topology) -> Result<Self> {
        let n = subtasks.len();
        if n == 0 {
            return Err(Error::InvalidTaskGraph("no subtasks".into()));
        }
        for (i, st) in subtasks.iter().enumerate() {
            if st.id != i {
                return Err(Error::InvalidTaskGraph(format!(
                    "subtask ids must be contiguous from 0, position {i} has id {}",
                    st.id
                )));
            }
            if st.tolerable_time_s <= 0.0 || !st.tolerable_time_s.is_finite() {
                return Err(Error::InvalidTaskGraph(format!(
                    "subtask {i}: tolerable_time_s must be positive, got {}",
                    st.tolerable_time_s
                )));
            }
            if st.data_size_mb < 0.0 || !st.data_size_mb.is_finite() {
                return Err(Error::InvalidTaskGraph(format!(
                    "subtask {i}: data_size_mb must be non-negative, got {}",
                    st.data_size_mb
                )));
            }
            if st.cycles_gcycles < 0.0 || !st.cycles_gcycles.is_finite() {
                return Err(Error::InvalidTaskGraph(format!(
                    "subtask {i}: cycles_gcycles must be non-negative, got {}",
                    st.cycles_gcycles
                )));
            }
        }
        let edges = canonical_edges(edges.into_iter().map(|e| (e.u, e.v, e.weight_s)), n)
            .map_err(Error::InvalidTaskGraph)?
            .into_iter()
            .map(|(u, v, weight_s)| TaskEdge { u, v, weight_s })
            .collect::<Vec<_>>();
        for e in &edges {
            if e.weight_s < 0.0 || !e.weight_s.is_finite() {
                return Err(Error::InvalidTaskGraph(format!(
                    "edge ({}, {}): weight_s must be non-negative, got {}",
                    e.u, e.v, e.weight_s
                )));
            }
        }
        let graph = Self {
            subtasks,
            edges,
            topology_tag,
        };
        if !graph.is_connected() {
            return Err(Error::InvalidTaskGraph("graph is not connected".into()));
        }
        Ok(graph)
    }

    pub fn n_subtasks(&self) -> usize {
        self.subtasks.len()
    }

    /// Degree of each subtask, indexed by id.
    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0usize; self.subtasks.len()];
        for e in &self.edges {
            deg[e.u] += 1;
            deg[e.v] += 1;
        }
        deg
    }

    pub fn is_connected(&self) -> bool {
        connected(self.subtasks.len(), self.edges.iter().map(|e| (e.u, e.v)))
    }
}

/// Per-vehicle resource distributions: compute frequency f ~ N(mean, var)
/// in GHz and transmission rate r ~ N(mean, var) in Mb/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleParams {
    pub id: usize,
    pub f_mean_ghz: f64,
    pub f_var_ghz2: f64,
    pub r_mean_mbps: f64,
    pub r_var_mbps2: f64,
}

/// Per-contact distributions for a pair of vehicles: contact duration
/// t ~ Exp(mean) in seconds and exchange cost c ~ N(mean, var).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct V2VEdgeParams {
    pub a: usize,
    pub b: usize,
    pub t_mean_s: f64,
    pub c_mean: f64,
    pub c_var: f64,
}

/// The vehicular cloud: vehicles plus the pairs currently in contact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CloudGraph {
    pub vehicles: Vec<VehicleParams>,
    pub edges: Vec<V2VEdgeParams>,
}

impl CloudGraph {
    /// Builds a cloud graph, canonicalizing the edge list. Disconnected
    /// clouds are allowed; they simply admit fewer mappings.
    pub fn new(vehicles: Vec<VehicleParams>, edges: Vec<V2VEdgeParams>) -> Result<Self> {
        let n = vehicles.len();
        if n == 0 {
            return Err(Error::InvalidCloudGraph("no vehicles".into()));
        }
        for (i, v) in vehicles.iter().enumerate() {
            if v.id != i {
                return Err(Error::InvalidCloudGraph(format!(
                    "vehicle ids must be contiguous from 0, position {i} has id {}",
                    v.id
                )));
            }
            for (name, value, strict) in [
                ("f_mean_ghz", v.f_mean_ghz, true),
                ("f_var_ghz2", v.f_var_ghz2, true),
                ("r_mean_mbps", v.r_mean_mbps, true),
                ("r_var_mbps2", v.r_var_mbps2, true),
            ] {
                if !value.is_finite() || (strict && value <= 0.0) {
                    return Err(Error::InvalidCloudGraph(format!(
                        "vehicle {i}: {name} must be positive and finite, got {value}"
                    )));
                }
            }
        }
        let canonical = canonical_edges(edges.iter().map(|e| (e.a, e.b, 0.0)), n)
            .map_err(Error::InvalidCloudGraph)?;
        let mut by_pair: Vec<V2VEdgeParams> = edges;
        for e in &mut by_pair {
            if e.a > e.b {
                std::mem::swap(&mut e.a, &mut e.b);
            }
        }
        by_pair.sort_by_key(|e| (e.a, e.b));
        debug_assert_eq!(canonical.len(), by_pair.len());
        for (i, e) in by_pair.iter().enumerate() {
            if e.t_mean_s <= 0.0 || !e.t_mean_s.is_finite() {
                return Err(Error::InvalidCloudGraph(format!(
                    "edge {i} ({}, {}): t_mean_s must be positive, got {}",
                    e.a, e.b, e.t_mean_s
                )));
            }
            if e.c_mean <= 0.0 || !e.c_mean.is_finite() {
                return Err(Error::InvalidCloudGraph(format!(
                    "edge {i} ({}, {}): c_mean must be positive, got {}",
                    e.a, e.b, e.c_mean
                )));
            }
            if e.c_var <= 0.0 || !e.c_var.is_finite() {
                return Err(Error::InvalidCloudGraph(format!(
                    "edge {i} ({}, {}): c_var must be positive, got {}",
                    e.a, e.b, e.c_var
                )));
            }
        }
        Ok(Self {
            vehicles,
            edges: by_pair,
        })
    }

    pub fn n_vehicles(&self) -> usize {
        self.vehicles.len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0usize; self.vehicles.len()];
        for e in &self.edges {
            deg[e.a] += 1;
            deg[e.b] += 1;
        }
        deg
    }

    /// Builds the dense pair-to-edge lookup used by the search and
    /// feasibility layers.
    pub fn index(&self) -> CloudIndex {
        CloudIndex::new(self)
    }
}

/// Dense adjacency index over a cloud graph: O(1) edge lookup by vehicle
/// pair plus cached degrees.
#[derive(Debug, Clone)]
pub struct CloudIndex {
    n: usize,
    edge_of: Vec<Option<u32>>,
    degree: Vec<usize>,
}

impl CloudIndex {
    fn new(cloud: &CloudGraph) -> Self {
        let n = cloud.n_vehicles();
        let mut edge_of = vec![None; n * n];
        for (idx, e) in cloud.edges.iter().enumerate() {
            edge_of[e.a * n + e.b] = Some(idx as u32);
            edge_of[e.b * n + e.a] = Some(idx as u32);
        }
        Self {
            n,
            edge_of,
            degree: cloud.degrees(),
        }
    }

    pub fn n_vehicles(&self) -> usize {
        self.n
    }

    /// Canonical edge index for the pair, if the vehicles are in contact.
    pub fn edge_between(&self, a: usize, b: usize) -> Option<usize> {
        self.edge_of[a * self.n + b].map(|i| i as usize)
    }

    pub fn degree(&self, v: usize) -> usize {
        self.degree[v]
    }
}

/// Clamp bounds for every random variable family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClipBounds {
    pub f_lo_ghz: f64,
    pub f_hi_ghz: f64,
    pub t_lo_s: f64,
    pub t_hi_s: f64,
    pub c_lo: f64,
    pub c_hi: f64,
    pub r_lo_mbps: f64,
    pub r_hi_mbps: f64,
}

impl Default for ClipBounds {
    fn default() -> Self {
        Self {
            f_lo_ghz: 1.5,
            f_hi_ghz: 4.5,
            t_lo_s: 0.0,
            t_hi_s: 60.0,
            c_lo: 0.025,
            c_hi: 0.075,
            r_lo_mbps: 4.0,
            r_hi_mbps: 8.0,
        }
    }
}

/// How per-mapping completion time aggregates over subtasks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CompletionMode {
    /// Slowest subtask (makespan). The default.
    Makespan,
    /// Sum of per-subtask times.
    Sum,
}

/// How the deadline risk aggregates over subtasks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Risk1Mode {
    /// P(any subtask misses its deadline). The default.
    Joint,
    /// Worst single-subtask miss probability.
    PerSubtask,
}

/// Evaluation switches; the defaults match the headline cost model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalOptions {
    pub completion: CompletionMode,
    pub risk1: Risk1Mode,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            completion: CompletionMode::Makespan,
            risk1: Risk1Mode::Joint,
        }
    }
}

/// A complete scheduling problem instance: the task, the cloud, the cost
/// weights, the risk thresholds, and the clip bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub task: TaskGraph,
    pub cloud: CloudGraph,
    pub w_time: f64,
    pub w_cost: f64,
    pub eps1: f64,
    pub eps2: f64,
    #[serde(default)]
    pub clips: ClipBounds,
    #[serde(default)]
    pub eval: EvalOptions,
}

impl Scenario {
    /// Collects every validation violation; empty means the scenario is
    /// ready to run.
    pub fn validate(&self) -> Vec<String> {
        validate_scenario(self)
    }

    /// Content hash of the scenario, used to guard persisted plans against
    /// being replayed on a different instance.
    pub fn digest(&self) -> String {
        let json = serde_json::to_string(self).expect("scenario serialization is infallible");
        hex_digest(json.as_bytes())
    }
}

/// One concrete draw of all random variables: `f`/`r` indexed by vehicle
/// id, `t`/`c` by canonical cloud edge index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Realization {
    pub f: Vec<f64>,
    pub r: Vec<f64>,
    pub t: Vec<f64>,
    pub c: Vec<f64>,
}

impl Realization {
    /// Validates vector shapes against the scenario and containment within
    /// its clip bounds.
    pub fn new(f: Vec<f64>, r: Vec<f64>, t: Vec<f64>, c: Vec<f64>, s: &Scenario) -> Result<Self> {
        let nv = s.cloud.n_vehicles();
        let ne = s.cloud.edges.len();
        if f.len() != nv || r.len() != nv {
            return Err(Error::RealizationOutOfBounds(format!(
                "expected {nv} vehicle draws, got f: {}, r: {}",
                f.len(),
                r.len()
            )));
        }
        if t.len() != ne || c.len() != ne {
            return Err(Error::RealizationOutOfBounds(format!(
                "expected {ne} edge draws, got t: {}, c: {}",
                t.len(),
                c.len()
            )));
        }
        let clips = &s.clips;
        let checks = [
            ("f", &f, clips.f_lo_ghz, clips.f_hi_ghz),
            ("r", &r, clips.r_lo_mbps, clips.r_hi_mbps),
            ("t", &t, clips.t_lo_s, clips.t_hi_s),
            ("c", &c, clips.c_lo, clips.c_hi),
        ];
        for (name, values, lo, hi) in checks {
            for (i, &x) in values.iter().enumerate() {
                if !x.is_finite() || x < lo || x > hi {
                    return Err(Error::RealizationOutOfBounds(format!(
                        "{name}[{i}] = {x} outside clip [{lo}, {hi}]"
                    )));
                }
            }
        }
        Ok(Self { f, r, t, c })
    }

    pub fn digest(&self) -> String {
        let json = serde_json::to_string(self).expect("realization serialization is infallible");
        hex_digest(json.as_bytes())
    }
}

fn hex_digest(bytes: &[u8]) -> String {
    let hash = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for b in hash {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

/// Normalizes an undirected edge list: endpoints low-to-high, sorted, with
/// loops, duplicates, and out-of-range ids rejected.
fn canonical_edges<I>(edges: I, n: usize) -> std::result::Result<Vec<(usize, usize, f64)>, String>
where
    I: Iterator<Item = (usize, usize, f64)>,
{
    let mut out: Vec<(usize, usize, f64)> = Vec::new();
    for (u, v, w) in edges {
        if u >= n || v >= n {
            return Err(format!("edge ({u}, {v}) references a vertex outside 0..{n}"));
        }
        if u == v {
            return Err(format!("self-loop at vertex {u}"));
        }
        let (a, b) = if u < v { (u, v) } else { (v, u) };
        out.push((a, b, w));
    }
    out.sort_by_key(|x| (x.0, x.1));
    for pair in out.windows(2) {
        if (pair[0].0, pair[0].1) == (pair[1].0, pair[1].1) {
            return Err(format!("duplicate edge ({}, {})", pair[0].0, pair[0].1));
        }
    }
    Ok(out)
}

pub(crate) fn connected<I>(n: usize, edges: I) -> bool
where
    I: Iterator<Item = (usize, usize)>,
{
    if n == 0 {
        return false;
    }
    let mut adj = vec![Vec::new(); n];
    for (u, v) in edges {
        adj[u].push(v);
        adj[v].push(u);
    }
    let mut seen = vec![false; n];
    let mut stack = vec![0usize];
    seen[0] = true;
    let mut count = 1;
    while let Some(u) = stack.pop() {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                count += 1;
                stack.push(v);
            }
        }
    }
    count == n
}

#[cfg(test)]
pub mod test_fixtures {
    use super::*;

    /// Star task on 3 subtasks over a 4-vehicle cloud with fixed parameters.
    pub fn small_scenario() -> Scenario {
        let subtasks = (0..3)
            .map(|id| Subtask {
                id,
                tolerable_time_s: 2.0,
                data_size_mb: 1.5,
                cycles_gcycles: 1.0,
            })
            .collect();
        let edges = vec![
            TaskEdge {
                u: 0,
                v: 1,
                weight_s: 0.5,
            },
            TaskEdge {
                u: 0,
                v: 2,
                weight_s: 0.5,
            },
        ];
        let task = TaskGraph::new(subtasks, edges, Topology::Star).unwrap();
        let vehicles = (0..4)
            .map(|id| VehicleParams {
                id,
                f_mean_ghz: 3.0,
                f_var_ghz2: 0.05,
                r_mean_mbps: 6.0,
                r_var_mbps2: 0.55,
            })
            .collect();
        let t_means = [8.0, 11.0, 9.0, 13.0, 7.0];
        let cloud_edges = [(0, 1), (0, 2), (0, 3), (1, 2), (2, 3)]
            .iter()
            .zip(t_means)
            .map(|(&(a, b), t_mean_s)| V2VEdgeParams {
                a,
                b,
                t_mean_s,
                c_mean: 0.05,
                c_var: 0.001,
            })
            .collect();
        let cloud = CloudGraph::new(vehicles, cloud_edges).unwrap();
        Scenario {
            task,
            cloud,
            w_time: 0.5,
            w_cost: 0.5,
            eps1: 0.3,
            eps2: 0.3,
            clips: ClipBounds::default(),
            eval: EvalOptions::default(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn subtasks(n: usize) -> Vec<Subtask> {
        (0..n)
            .map(|id| Subtask {
                id,
                tolerable_time_s: 2.0,
                data_size_mb: 1.0,
                cycles_gcycles: 1.0,
            })
            .collect()
    }

    fn edge(u: usize, v: usize) -> TaskEdge {
        TaskEdge { u, v, weight_s: 1.0 }
    }

    #[test]
    fn task_graph_canonicalizes_edges() {
        let g = TaskGraph::new(
            subtasks(3),
            vec![edge(2, 0), edge(1, 0)],
            Topology::Custom,
        )
        .unwrap();
        let pairs: Vec<(usize, usize)> = g.edges.iter().map(|e| (e.u, e.v)).collect();
        assert_eq!(pairs, vec![(0, 1), (0, 2)]);
        assert_eq!(g.degrees(), vec![2, 1, 1]);
    }

    #[test]
    fn task_graph_rejects_malformed_structure() {
        assert!(TaskGraph::new(vec![], vec![], Topology::Custom).is_err());
        assert!(TaskGraph::new(subtasks(2), vec![edge(0, 0)], Topology::Custom).is_err());
        assert!(TaskGraph::new(subtasks(2), vec![edge(0, 5)], Topology::Custom).is_err());
        assert!(
            TaskGraph::new(subtasks(2), vec![edge(0, 1), edge(1, 0)], Topology::Custom).is_err()
        );
        // disconnected
        assert!(TaskGraph::new(subtasks(3), vec![edge(0, 1)], Topology::Custom).is_err());
        let mut bad = subtasks(2);
        bad[1].id = 7;
        assert!(TaskGraph::new(bad, vec![edge(0, 1)], Topology::Custom).is_err());
        let mut neg = subtasks(2);
        neg[0].tolerable_time_s = 0.0;
        assert!(TaskGraph::new(neg, vec![edge(0, 1)], Topology::Custom).is_err());
    }

    #[test]
    fn single_subtask_graph_is_connected() {
        let g = TaskGraph::new(subtasks(1), vec![], Topology::Custom).unwrap();
        assert!(g.is_connected());
    }

    fn vehicles(n: usize) -> Vec<VehicleParams> {
        (0..n)
            .map(|id| VehicleParams {
                id,
                f_mean_ghz: 3.0,
                f_var_ghz2: 0.05,
                r_mean_mbps: 6.0,
                r_var_mbps2: 0.55,
            })
            .collect()
    }

    fn v2v(a: usize, b: usize) -> V2VEdgeParams {
        V2VEdgeParams {
            a,
            b,
            t_mean_s: 10.0,
            c_mean: 0.05,
            c_var: 0.001,
        }
    }

    #[test]
    fn cloud_index_looks_up_pairs_both_ways() {
        let cloud = CloudGraph::new(vehicles(4), vec![v2v(2, 0), v2v(1, 2)]).unwrap();
        // canonicalized to (0,2), (1,2)
        assert_eq!(cloud.edges[0].a, 0);
        assert_eq!(cloud.edges[0].b, 2);
        let idx = cloud.index();
        assert_eq!(idx.edge_between(0, 2), Some(0));
        assert_eq!(idx.edge_between(2, 0), Some(0));
        assert_eq!(idx.edge_between(1, 2), Some(1));
        assert_eq!(idx.edge_between(0, 1), None);
        assert_eq!(idx.degree(2), 2);
        assert_eq!(idx.degree(3), 0);
    }

    #[test]
    fn cloud_rejects_bad_parameters() {
        let mut vs = vehicles(2);
        vs[0].f_var_ghz2 = 0.0;
        assert!(CloudGraph::new(vs, vec![v2v(0, 1)]).is_err());
        let mut bad_edge = v2v(0, 1);
        bad_edge.t_mean_s = -1.0;
        assert!(CloudGraph::new(vehicles(2), vec![bad_edge]).is_err());
        assert!(CloudGraph::new(vehicles(2), vec![v2v(0, 1), v2v(1, 0)]).is_err());
    }

    #[test]
    fn realization_validates_shape_and_containment() {
        let s = test_fixtures::small_scenario();
        let nv = s.cloud.n_vehicles();
        let ne = s.cloud.edges.len();
        let ok = Realization::new(
            vec![3.0; nv],
            vec![6.0; nv],
            vec![5.0; ne],
            vec![0.05; ne],
            &s,
        );
        assert!(ok.is_ok());
        let short = Realization::new(vec![3.0; nv - 1], vec![6.0; nv], vec![5.0; ne], vec![0.05; ne], &s);
        assert!(short.is_err());
        let outside = Realization::new(
            vec![9.0; nv],
            vec![6.0; nv],
            vec![5.0; ne],
            vec![0.05; ne],
            &s,
        );
        assert!(outside.is_err());
    }

    #[test]
    fn scenario_digest_tracks_content() {
        let s = test_fixtures::small_scenario();
        let mut s2 = s.clone();
        assert_eq!(s.digest(), s2.digest());
        s2.eps1 = 0.29;
        assert_ne!(s.digest(), s2.digest());
    }

    #[test]
    fn topology_round_trips_through_strings() {
        for t in [Topology::Star, Topology::Ring, Topology::Tadpole] {
            assert_eq!(t.to_string().parse::<Topology>().unwrap(), t);
        }
        assert!("lattice".parse::<Topology>().is_err());
        assert_eq!("Star".parse::<Topology>().unwrap(), Topology::Star);
    }
}
