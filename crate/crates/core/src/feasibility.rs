//! Mapping evaluation: structural checks, realized cost, deterministic
//! feasibility, and the two chance-constraint risks.
//!
//! A mapping assigns subtask i to vehicle `assign[i]`. It is structurally
//! valid when it is injective and every task edge lands on a pair of
//! vehicles that are in contact.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{CloudIndex, CompletionMode, Realization, Risk1Mode, Scenario};
use crate::stochastic::{cdf_contact_below, mc_expectation, realize, RngStream, TruncExponential};

/// An assignment of subtasks to vehicles, indexed by subtask id.
///
/// Ordering is lexicographic on the assignment vector, which is the
/// tie-breaking order used throughout the search layer.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Mapping {
    assign: Vec<usize>,
}

impl Mapping {
    pub fn new(assign: Vec<usize>) -> Self {
        Self { assign }
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.assign
    }

    pub fn len(&self) -> usize {
        self.assign.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assign.is_empty()
    }

    /// Vehicle carrying subtask `i`.
    pub fn vehicle_for(&self, i: usize) -> usize {
        self.assign[i]
    }

    pub fn is_injective(&self) -> bool {
        let mut seen = self.assign.clone();
        seen.sort_unstable();
        seen.windows(2).all(|w| w[0] != w[1])
    }
}

impl From<Mapping> for Vec<usize> {
    fn from(m: Mapping) -> Self {
        m.assign
    }
}

/// Realized cost of one mapping under one draw.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub completion_time_s: f64,
    pub exchange_cost: f64,
    pub f_value: f64,
}

/// The two chance-constraint risks and their joint verdict.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskReport {
    pub risk_deadline: f64,
    pub risk_structure: f64,
    pub feasible: bool,
}

/// True when the mapping is injective, in range, and preserves every task
/// edge as a vehicle contact.
pub fn structural_ok(m: &Mapping, s: &Scenario) -> bool {
    structural_ok_indexed(m, s, &s.cloud.index())
}

pub(crate) fn structural_ok_indexed(m: &Mapping, s: &Scenario, index: &CloudIndex) -> bool {
    if m.len() != s.task.n_subtasks() {
        return false;
    }
    if m.as_slice().iter().any(|&a| a >= index.n_vehicles()) {
        return false;
    }
    if !m.is_injective() {
        return false;
    }
    s.task
        .edges
        .iter()
        .all(|e| index.edge_between(m.vehicle_for(e.u), m.vehicle_for(e.v)).is_some())
}

/// Realized completion time of subtask `i` on vehicle `a`: transmit the
/// input, then compute.
#[inline]
pub(crate) fn subtask_time(s: &Scenario, real: &Realization, i: usize, a: usize) -> f64 {
    let st = &s.task.subtasks[i];
    st.data_size_mb / real.r[a] + st.cycles_gcycles / real.f[a]
}

pub(crate) fn cost_indexed(
    m: &Mapping,
    s: &Scenario,
    real: &Realization,
    index: &CloudIndex,
) -> CostBreakdown {
    let completion_time_s = match s.eval.completion {
        CompletionMode::Makespan => (0..m.len())
            .map(|i| subtask_time(s, real, i, m.vehicle_for(i)))
            .fold(0.0, f64::max),
        CompletionMode::Sum => (0..m.len())
            .map(|i| subtask_time(s, real, i, m.vehicle_for(i)))
            .sum(),
    };
    let exchange_cost = s
        .task
        .edges
        .iter()
        .map(|e| {
            let edge = index
                .edge_between(m.vehicle_for(e.u), m.vehicle_for(e.v))
                .expect("structural check precedes cost evaluation");
            real.c[edge]
        })
        .sum();
    CostBreakdown {
        completion_time_s,
        exchange_cost,
        f_value: s.w_time * completion_time_s + s.w_cost * exchange_cost,
    }
}

/// Realized cost of a mapping under one draw. Errors if the mapping is not
/// structurally valid.
pub fn realized_cost(m: &Mapping, s: &Scenario, real: &Realization) -> Result<CostBreakdown> {
    let index = s.cloud.index();
    if !structural_ok_indexed(m, s, &index) {
        return Err(Error::InvalidMapping(format!(
            "mapping {:?} is not structurally valid for this scenario",
            m.as_slice()
        )));
    }
    Ok(cost_indexed(m, s, real, &index))
}

/// True when, under this draw, every subtask meets its deadline and every
/// task edge's contact lasts at least the edge weight. Boundary values
/// count as feasible.
pub fn deterministic_feasible(m: &Mapping, s: &Scenario, real: &Realization) -> bool {
    let index = s.cloud.index();
    deterministic_feasible_indexed(m, s, real, &index)
}

pub(crate) fn deterministic_feasible_indexed(
    m: &Mapping,
    s: &Scenario,
    real: &Realization,
    index: &CloudIndex,
) -> bool {
    if !structural_ok_indexed(m, s, index) {
        return false;
    }
    for i in 0..m.len() {
        if subtask_time(s, real, i, m.vehicle_for(i)) > s.task.subtasks[i].tolerable_time_s {
            return false;
        }
    }
    for e in &s.task.edges {
        let edge = index
            .edge_between(m.vehicle_for(e.u), m.vehicle_for(e.v))
            .expect("structural check passed");
        if real.t[edge] < e.weight_s {
            return false;
        }
    }
    true
}

/// Monte Carlo estimate of the deadline risk: with the default joint mode,
/// P(any subtask misses its deadline) over `n_samples` draws.
pub fn risk_deadline(m: &Mapping, s: &Scenario, n_samples: usize, stream: &RngStream) -> Result<f64> {
    if n_samples == 0 {
        return Err(Error::NoSamples);
    }
    let index = s.cloud.index();
    if !structural_ok_indexed(m, s, &index) {
        return Err(Error::InvalidMapping(format!(
            "mapping {:?} is not structurally valid for this scenario",
            m.as_slice()
        )));
    }
    match s.eval.risk1 {
        Risk1Mode::Joint => {
            let est = mc_expectation(
                |real| {
                    let miss = (0..m.len()).any(|i| {
                        subtask_time(s, real, i, m.vehicle_for(i))
                            > s.task.subtasks[i].tolerable_time_s
                    });
                    if miss {
                        1.0
                    } else {
                        0.0
                    }
                },
                s,
                n_samples,
                stream,
            )?;
            Ok(est.mean)
        }
        Risk1Mode::PerSubtask => {
            let k = m.len();
            let counts = (0..n_samples)
                .into_par_iter()
                .fold(
                    || vec![0u64; k],
                    |mut acc, sample| {
                        let real = realize(s, &stream.indexed(sample));
                        for (i, slot) in acc.iter_mut().enumerate() {
                            if subtask_time(s, &real, i, m.vehicle_for(i))
                                > s.task.subtasks[i].tolerable_time_s
                            {
                                *slot += 1;
                            }
                        }
                        acc
                    },
                )
                .reduce(
                    || vec![0u64; k],
                    |mut a, b| {
                        for (x, y) in a.iter_mut().zip(b) {
                            *x += y;
                        }
                        a
                    },
                );
            let worst = counts.into_iter().max().unwrap_or(0);
            Ok(worst as f64 / n_samples as f64)
        }
    }
}

/// Analytic structure risk: the probability that at least one required
/// contact ends before its edge weight, contacts independent.
pub fn risk_structure(m: &Mapping, s: &Scenario) -> Result<f64> {
    let index = s.cloud.index();
    if !structural_ok_indexed(m, s, &index) {
        return Err(Error::InvalidMapping(format!(
            "mapping {:?} is not structurally valid for this scenario",
            m.as_slice()
        )));
    }
    let mut survive = 1.0;
    for e in &s.task.edges {
        let edge = index
            .edge_between(m.vehicle_for(e.u), m.vehicle_for(e.v))
            .expect("structural check passed");
        let d = TruncExponential::new(s.cloud.edges[edge].t_mean_s, s.clips.t_hi_s)?;
        survive *= 1.0 - cdf_contact_below(e.weight_s, &d)?;
    }
    Ok(1.0 - survive)
}

/// Evaluates both chance constraints; `feasible` means both risks sit at or
/// below their thresholds.
pub fn risk_feasible(
    m: &Mapping,
    s: &Scenario,
    n_samples: usize,
    stream: &RngStream,
) -> Result<RiskReport> {
    let risk1 = risk_deadline(m, s, n_samples, stream)?;
    let risk2 = risk_structure(m, s)?;
    Ok(RiskReport {
        risk_deadline: risk1,
        risk_structure: risk2,
        feasible: risk1 <= s.eps1 && risk2 <= s.eps2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::test_fixtures::small_scenario;
    use crate::model::{CompletionMode, Risk1Mode};
    use crate::stochastic::draw_realizations;

    fn flat_realization(s: &Scenario) -> Realization {
        let nv = s.cloud.n_vehicles();
        let ne = s.cloud.edges.len();
        Realization::new(vec![3.0; nv], vec![6.0; nv], vec![5.0; ne], vec![0.05; ne], s).unwrap()
    }

    #[test]
    fn structural_check_catches_each_defect() {
        let s = small_scenario();
        assert!(structural_ok(&Mapping::new(vec![0, 1, 2]), &s));
        // two subtasks on one vehicle
        assert!(!structural_ok(&Mapping::new(vec![0, 0, 1]), &s));
        // wrong arity
        assert!(!structural_ok(&Mapping::new(vec![0, 1]), &s));
        // vehicle out of range
        assert!(!structural_ok(&Mapping::new(vec![0, 1, 9]), &s));
        // task edge (0,1) lands on the non-contact pair (1,3)
        assert!(!structural_ok(&Mapping::new(vec![1, 3, 2]), &s));
    }

    #[test]
    fn realized_cost_hand_computed() {
        let s = small_scenario();
        let real = flat_realization(&s);
        let cost = realized_cost(&Mapping::new(vec![0, 1, 2]), &s, &real).unwrap();
        // each subtask: 1.5/6 + 1/3 = 7/12
        let t = 7.0 / 12.0;
        assert!((cost.completion_time_s - t).abs() < 1e-12);
        assert!((cost.exchange_cost - 0.1).abs() < 1e-12);
        assert!((cost.f_value - (0.5 * t + 0.5 * 0.1)).abs() < 1e-12);
        assert_eq!(
            cost.f_value,
            s.w_time * cost.completion_time_s + s.w_cost * cost.exchange_cost
        );
    }

    #[test]
    fn realized_cost_rejects_invalid_mapping() {
        let s = small_scenario();
        let real = flat_realization(&s);
        assert!(matches!(
            realized_cost(&Mapping::new(vec![0, 0, 1]), &s, &real),
            Err(Error::InvalidMapping(_))
        ));
    }

    #[test]
    fn sum_mode_adds_subtask_times() {
        let mut s = small_scenario();
        s.eval.completion = CompletionMode::Sum;
        let real = flat_realization(&s);
        let cost = realized_cost(&Mapping::new(vec![0, 1, 2]), &s, &real).unwrap();
        assert!((cost.completion_time_s - 3.0 * 7.0 / 12.0).abs() < 1e-12);
    }

    #[test]
    fn deterministic_feasibility_boundaries_are_inclusive() {
        let mut s = small_scenario();
        let real = flat_realization(&s);
        let m = Mapping::new(vec![0, 1, 2]);
        assert!(deterministic_feasible(&m, &s, &real));

        // deadline exactly met still counts
        for st in &mut s.task.subtasks {
            st.tolerable_time_s = 7.0 / 12.0;
        }
        assert!(deterministic_feasible(&m, &s, &real));
        for st in &mut s.task.subtasks {
            st.tolerable_time_s = 0.58;
        }
        assert!(!deterministic_feasible(&m, &s, &real));

        // contact exactly as long as the edge weight still counts
        let mut s = small_scenario();
        for e in &mut s.task.edges {
            e.weight_s = 5.0;
        }
        assert!(deterministic_feasible(&m, &s, &real));
        for e in &mut s.task.edges {
            e.weight_s = 5.0 + 1e-9;
        }
        assert!(!deterministic_feasible(&m, &s, &real));
    }

    #[test]
    fn deterministic_feasibility_rejects_structural_failure() {
        let s = small_scenario();
        let real = flat_realization(&s);
        assert!(!deterministic_feasible(&Mapping::new(vec![0, 0, 1]), &s, &real));
    }

    #[test]
    fn structure_risk_closed_form() {
        let s = small_scenario();
        // mapping [0,1,2] uses cloud edges (0,1) and (0,2): means 8 and 11
        let risk = risk_structure(&Mapping::new(vec![0, 1, 2]), &s).unwrap();
        let expected = 1.0 - (-(0.5f64 / 8.0 + 0.5 / 11.0)).exp();
        assert!((risk - expected).abs() < 1e-12);

        // zero-weight edges carry no structure risk
        let mut s0 = small_scenario();
        for e in &mut s0.task.edges {
            e.weight_s = 0.0;
        }
        assert_eq!(risk_structure(&Mapping::new(vec![0, 1, 2]), &s0).unwrap(), 0.0);
    }

    #[test]
    fn structure_risk_grows_with_weight() {
        let mut prev = 0.0;
        for i in 1..10 {
            let mut s = small_scenario();
            for e in &mut s.task.edges {
                e.weight_s = i as f64;
            }
            let risk = risk_structure(&Mapping::new(vec![0, 1, 2]), &s).unwrap();
            assert!(risk > prev);
            prev = risk;
        }
    }

    #[test]
    fn deadline_risk_matches_direct_recount() {
        let s = small_scenario();
        let m = Mapping::new(vec![0, 1, 2]);
        let stream = RngStream::new(5, "risk");
        let n = 4000;
        let risk = risk_deadline(&m, &s, n, &stream).unwrap();
        let misses = draw_realizations(&s, &stream, n)
            .iter()
            .filter(|real| {
                (0..3).any(|i| {
                    subtask_time(&s, real, i, m.vehicle_for(i)) > s.task.subtasks[i].tolerable_time_s
                })
            })
            .count();
        assert_eq!(risk, misses as f64 / n as f64);
        assert_eq!(risk, risk_deadline(&m, &s, n, &stream).unwrap());
    }

    #[test]
    fn deadline_risk_is_monotone_in_deadline() {
        let stream = RngStream::new(6, "risk");
        let m = Mapping::new(vec![0, 1, 2]);
        let mut tight = small_scenario();
        for st in &mut tight.task.subtasks {
            st.tolerable_time_s = 0.55;
        }
        let mut loose = small_scenario();
        for st in &mut loose.task.subtasks {
            st.tolerable_time_s = 0.75;
        }
        let r_tight = risk_deadline(&m, &tight, 4000, &stream).unwrap();
        let r_loose = risk_deadline(&m, &loose, 4000, &stream).unwrap();
        assert!(r_tight > r_loose);
        assert!((0.0..=1.0).contains(&r_tight));
    }

    #[test]
    fn per_subtask_risk_never_exceeds_joint() {
        let mut s = small_scenario();
        for st in &mut s.task.subtasks {
            st.tolerable_time_s = 0.6;
        }
        let m = Mapping::new(vec![0, 1, 2]);
        let stream = RngStream::new(7, "risk");
        let joint = risk_deadline(&m, &s, 4000, &stream).unwrap();
        s.eval.risk1 = Risk1Mode::PerSubtask;
        let per = risk_deadline(&m, &s, 4000, &stream).unwrap();
        assert!(per <= joint, "per {per} joint {joint}");
        assert!(per > 0.0);
    }

    #[test]
    fn risk_errors_are_reported() {
        let s = small_scenario();
        let stream = RngStream::new(8, "risk");
        assert!(matches!(
            risk_deadline(&Mapping::new(vec![0, 1, 2]), &s, 0, &stream),
            Err(Error::NoSamples)
        ));
        assert!(risk_deadline(&Mapping::new(vec![0, 0, 1]), &s, 10, &stream).is_err());
        assert!(risk_structure(&Mapping::new(vec![0, 0, 1]), &s).is_err());
    }

    #[test]
    fn risk_feasible_threshold_is_inclusive() {
        let mut s = small_scenario();
        let m = Mapping::new(vec![0, 1, 2]);
        let stream = RngStream::new(9, "risk");
        let report = risk_feasible(&m, &s, 2000, &stream).unwrap();
        assert!(report.feasible);

        s.eps2 = risk_structure(&m, &s).unwrap();
        let at_boundary = risk_feasible(&m, &s, 2000, &stream).unwrap();
        assert!(at_boundary.feasible);

        s.eps2 *= 0.5;
        s.eps1 = 1e-9;
        let over = risk_feasible(&m, &s, 2000, &stream).unwrap();
        assert!(!over.feasible);
    }
}
