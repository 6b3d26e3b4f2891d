//! Mapping search: pruned backtracking enumeration of structurally valid
//! mappings under a pluggable predicate, an unpruned exhaustive baseline,
//! and the greedy and random baseline constructions.

use rand::Rng;
use std::time::Instant;

use crate::feasibility::Mapping;
use crate::model::{CloudIndex, CompletionMode, Realization, Scenario};
use crate::stochastic::RngStream;

/// Counters describing one search invocation.
///
/// `nodes_expanded` counts dead ends and completed assignments: a candidate
/// (subtask, vehicle) extension that fails a check, or a fully built
/// mapping. Accepted intermediate extensions are not counted, so the total
/// never exceeds the number of complete injective assignments an unpruned
/// enumeration would visit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchStats {
    pub nodes_expanded: u64,
    pub mappings_found: u64,
    pub wall_time_s: f64,
}

/// Pruning interface for [`enumerate_feasible`]. Every check must be sound:
/// returning false must imply no acceptable mapping extends the candidate.
pub trait MappingPredicate: Sync {
    /// May `subtask` run on `vehicle` at all?
    fn vertex_ok(&self, subtask: usize, vehicle: usize) -> bool {
        let _ = (subtask, vehicle);
        true
    }

    /// May this task edge ride on this cloud edge?
    fn edge_ok(&self, task_edge: usize, cloud_edge: usize) -> bool {
        let _ = (task_edge, cloud_edge);
        true
    }

    /// Final check on a complete, structurally valid mapping.
    fn mapping_ok(&self, m: &Mapping) -> bool {
        let _ = m;
        true
    }
}

/// Accepts everything; enumeration degenerates to all structurally valid
/// mappings.
#[derive(Debug, Clone, Copy, Default)]
pub struct AcceptAll;

impl MappingPredicate for AcceptAll {}

struct EnumCtx<'a, P: MappingPredicate> {
    pred: &'a P,
    index: CloudIndex,
    /// Subtask visited at each search position.
    order: Vec<usize>,
    /// Per position: task edges back to already placed subtasks, as
    /// (earlier subtask, task edge index).
    back_edges: Vec<Vec<(usize, usize)>>,
    task_degree: Vec<usize>,
    assign: Vec<usize>,
    used: Vec<bool>,
    results: Vec<Mapping>,
    nodes: u64,
}

impl<P: MappingPredicate> EnumCtx<'_, P> {
    fn dfs(&mut self, p: usize) {
        let subtask = self.order[p];
        let last = p + 1 == self.order.len();
        for a in 0..self.index.n_vehicles() {
            if self.used[a] {
                continue;
            }
            if !self.candidate_ok(p, subtask, a) {
                self.nodes += 1;
                continue;
            }
            if last {
                self.nodes += 1;
                let m = Mapping::new(self.complete_with(subtask, a));
                if self.pred.mapping_ok(&m) {
                    self.results.push(m);
                }
            } else {
                self.assign[subtask] = a;
                self.used[a] = true;
                self.dfs(p + 1);
                self.used[a] = false;
            }
        }
    }

    fn candidate_ok(&self, p: usize, subtask: usize, a: usize) -> bool {
        if self.index.degree(a) < self.task_degree[subtask] {
            return false;
        }
        if !self.pred.vertex_ok(subtask, a) {
            return false;
        }
        for &(earlier, task_edge) in &self.back_edges[p] {
            let b = self.assign[earlier];
            match self.index.edge_between(a, b) {
                Some(cloud_edge) => {
                    if !self.pred.edge_ok(task_edge, cloud_edge) {
                        return false;
                    }
                }
                None => return false,
            }
        }
        true
    }

    fn complete_with(&self, subtask: usize, a: usize) -> Vec<usize> {
        let mut assign = self.assign.clone();
        assign[subtask] = a;
        assign
    }
}

/// Enumerates every structurally valid mapping accepted by the predicate.
///
/// Subtasks are visited in descending task-degree order unless `order_hint`
/// (a permutation of subtask ids) overrides it; the hint changes only the
/// traversal, never the result, and the output is sorted lexicographically
/// by assignment vector.
pub fn enumerate_feasible<P: MappingPredicate>(
    s: &Scenario,
    pred: &P,
    order_hint: Option<&[usize]>,
) -> (Vec<Mapping>, SearchStats) {
    let start = Instant::now();
    let n = s.task.n_subtasks();
    let order: Vec<usize> = match order_hint {
        Some(hint) => {
            assert_eq!(hint.len(), n, "order hint must cover every subtask");
            let mut seen = vec![false; n];
            for &i in hint {
                assert!(i < n && !seen[i], "order hint must be a permutation");
                seen[i] = true;
            }
            hint.to_vec()
        }
        None => {
            let deg = s.task.degrees();
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by_key(|&i| (std::cmp::Reverse(deg[i]), i));
            order
        }
    };

    let mut position = vec![0usize; n];
    for (p, &i) in order.iter().enumerate() {
        position[i] = p;
    }
    let mut back_edges: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for (idx, e) in s.task.edges.iter().enumerate() {
        let (pu, pv) = (position[e.u], position[e.v]);
        if pu < pv {
            back_edges[pv].push((e.u, idx));
        } else {
            back_edges[pu].push((e.v, idx));
        }
    }

    let index = s.cloud.index();
    let mut ctx = EnumCtx {
        pred,
        used: vec![false; index.n_vehicles()],
        index,
        order,
        back_edges,
        task_degree: s.task.degrees(),
        assign: vec![0; n],
        results: Vec::new(),
        nodes: 0,
    };
    if n <= ctx.index.n_vehicles() {
        ctx.dfs(0);
    }
    let mut results = ctx.results;
    results.sort_unstable();
    let stats = SearchStats {
        nodes_expanded: ctx.nodes,
        mappings_found: results.len() as u64,
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    (results, stats)
}

/// Unpruned baseline: walks every complete injective assignment in
/// lexicographic order, keeps the deterministically feasible ones, and
/// returns the realized-cost argmin (first-in-order wins ties).
///
/// `nodes_expanded` is exactly the number of complete assignments visited.
pub fn exhaustive(s: &Scenario, real: &Realization) -> (Option<Mapping>, SearchStats) {
    let start = Instant::now();
    let n = s.task.n_subtasks();
    let index = s.cloud.index();
    let nv = index.n_vehicles();

    // Flat tables so the per-leaf check is a handful of loads.
    let mut time = vec![0.0f64; n * nv];
    for i in 0..n {
        for a in 0..nv {
            time[i * nv + a] = crate::feasibility::subtask_time(s, real, i, a);
        }
    }
    let tau: Vec<f64> = s.task.subtasks.iter().map(|st| st.tolerable_time_s).collect();

    struct Walk<'a> {
        s: &'a Scenario,
        real: &'a Realization,
        index: &'a CloudIndex,
        time: &'a [f64],
        tau: &'a [f64],
        nv: usize,
        assign: Vec<usize>,
        used: Vec<bool>,
        nodes: u64,
        feasible: u64,
        best: Option<(f64, Vec<usize>)>,
    }

    impl Walk<'_> {
        fn go(&mut self, i: usize) {
            if i == self.assign.len() {
                self.nodes += 1;
                self.visit_leaf();
                return;
            }
            for a in 0..self.nv {
                if self.used[a] {
                    continue;
                }
                self.assign[i] = a;
                self.used[a] = true;
                self.go(i + 1);
                self.used[a] = false;
            }
        }

        fn visit_leaf(&mut self) {
            let n = self.assign.len();
            for i in 0..n {
                if self.time[i * self.nv + self.assign[i]] > self.tau[i] {
                    return;
                }
            }
            let mut exchange = 0.0;
            for e in &self.s.task.edges {
                match self.index.edge_between(self.assign[e.u], self.assign[e.v]) {
                    Some(ce) => {
                        if self.real.t[ce] < e.weight_s {
                            return;
                        }
                        exchange += self.real.c[ce];
                    }
                    None => return,
                }
            }
            self.feasible += 1;
            let completion = match self.s.eval.completion {
                CompletionMode::Makespan => (0..n)
                    .map(|i| self.time[i * self.nv + self.assign[i]])
                    .fold(0.0, f64::max),
                CompletionMode::Sum => (0..n)
                    .map(|i| self.time[i * self.nv + self.assign[i]])
                    .sum(),
            };
            let f = self.s.w_time * completion + self.s.w_cost * exchange;
            let better = match &self.best {
                Some((best_f, _)) => f < *best_f,
                None => true,
            };
            if better {
                self.best = Some((f, self.assign.clone()));
            }
        }
    }

    let mut walk = Walk {
        s,
        real,
        index: &index,
        time: &time,
        tau: &tau,
        nv,
        assign: vec![0; n],
        used: vec![false; nv],
        nodes: 0,
        feasible: 0,
        best: None,
    };
    if n <= nv {
        walk.go(0);
    }
    let stats = SearchStats {
        nodes_expanded: walk.nodes,
        mappings_found: walk.feasible,
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    (walk.best.map(|(_, assign)| Mapping::new(assign)), stats)
}

/// Baseline that greedily gives each subtask (in id order) the unused
/// vehicle with the smallest realized completion time for it. May produce
/// a structurally infeasible mapping; callers judge it afterwards.
pub fn greedy_timepref(s: &Scenario, real: &Realization) -> Mapping {
    let n = s.task.n_subtasks();
    let nv = s.cloud.n_vehicles();
    assert!(nv >= n, "needs at least as many vehicles as subtasks");
    let mut used = vec![false; nv];
    let mut assign = Vec::with_capacity(n);
    for i in 0..n {
        let mut best: Option<(f64, usize)> = None;
        for (a, &taken) in used.iter().enumerate() {
            if taken {
                continue;
            }
            let t = crate::feasibility::subtask_time(s, real, i, a);
            if best.is_none_or(|(bt, _)| t < bt) {
                best = Some((t, a));
            }
        }
        let (_, a) = best.expect("an unused vehicle always remains");
        assign.push(a);
        used[a] = true;
    }
    Mapping::new(assign)
}

/// Baseline that matches high-degree subtasks to high-degree vehicles,
/// ignoring realized resources entirely.
pub fn greedy_degpref(s: &Scenario) -> Mapping {
    let n = s.task.n_subtasks();
    let nv = s.cloud.n_vehicles();
    assert!(nv >= n, "needs at least as many vehicles as subtasks");
    let task_deg = s.task.degrees();
    let cloud_deg = s.cloud.degrees();
    let mut subtask_order: Vec<usize> = (0..n).collect();
    subtask_order.sort_by_key(|&i| (std::cmp::Reverse(task_deg[i]), i));
    let mut vehicle_order: Vec<usize> = (0..nv).collect();
    vehicle_order.sort_by_key(|&a| (std::cmp::Reverse(cloud_deg[a]), a));
    let mut assign = vec![0usize; n];
    for (rank, &i) in subtask_order.iter().enumerate() {
        assign[i] = vehicle_order[rank];
    }
    Mapping::new(assign)
}

/// Uniformly random injective mapping via a partial Fisher-Yates shuffle of
/// the vehicle ids.
pub fn random_mapping(s: &Scenario, stream: &RngStream) -> Mapping {
    let n = s.task.n_subtasks();
    let nv = s.cloud.n_vehicles();
    assert!(nv >= n, "needs at least as many vehicles as subtasks");
    let mut rng = stream.rng();
    let mut pool: Vec<usize> = (0..nv).collect();
    for i in 0..n {
        let j = rng.gen_range(i..nv);
        pool.swap(i, j);
    }
    Mapping::new(pool[..n].to_vec())
}
