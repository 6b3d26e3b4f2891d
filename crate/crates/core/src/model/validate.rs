//! Whole-scenario validation. Deserialized scenarios bypass the graph
//! constructors, so structural checks are re-run here.

use super::{CloudGraph, Scenario, TaskGraph};

/// Collects every violation in the scenario; an empty vector means it is
/// ready to run. Diagnostics are accumulated, not short-circuited.
pub fn validate_scenario(s: &Scenario) -> Vec<String> {
    let mut v = Vec::new();

    for (name, value) in [("w_time", s.w_time), ("w_cost", s.w_cost)] {
        if !value.is_finite() || value < 0.0 {
            v.push(format!("{name} must be finite and non-negative, got {value}"));
        }
    }
    if s.w_time + s.w_cost <= 0.0 {
        v.push(format!(
            "cost weights must not both be zero, got w_time = {}, w_cost = {}",
            s.w_time, s.w_cost
        ));
    }
    for (name, value) in [("eps1", s.eps1), ("eps2", s.eps2)] {
        if !value.is_finite() || value <= 0.0 || value >= 1.0 {
            v.push(format!("{name} must lie in (0, 1), got {value}"));
        }
    }

    let clips = &s.clips;
    for (name, lo, hi) in [
        ("f clip", clips.f_lo_ghz, clips.f_hi_ghz),
        ("t clip", clips.t_lo_s, clips.t_hi_s),
        ("c clip", clips.c_lo, clips.c_hi),
        ("r clip", clips.r_lo_mbps, clips.r_hi_mbps),
    ] {
        if !lo.is_finite() || !hi.is_finite() || lo >= hi {
            v.push(format!("{name} bounds must satisfy lo < hi, got [{lo}, {hi}]"));
        }
    }
    if clips.t_lo_s != 0.0 {
        v.push(format!(
            "t clip must start at 0 (contact durations are exponential), got {}",
            clips.t_lo_s
        ));
    }
    if clips.f_lo_ghz <= 0.0 {
        v.push(format!(
            "f clip lower bound must be positive (completion times divide by f), got {}",
            clips.f_lo_ghz
        ));
    }
    if clips.r_lo_mbps <= 0.0 {
        v.push(format!(
            "r clip lower bound must be positive (completion times divide by r), got {}",
            clips.r_lo_mbps
        ));
    }
    if clips.c_lo < 0.0 {
        v.push(format!(
            "c clip lower bound must be non-negative, got {}",
            clips.c_lo
        ));
    }

    match TaskGraph::new(
        s.task.subtasks.clone(),
        s.task.edges.clone(),
        s.task.topology_tag,
    ) {
        Ok(rebuilt) => {
            if rebuilt.edges != s.task.edges {
                v.push("task edge list is not in canonical order".into());
            }
        }
        Err(e) => v.push(format!("task graph: {e}")),
    }
    match CloudGraph::new(s.cloud.vehicles.clone(), s.cloud.edges.clone()) {
        Ok(rebuilt) => {
            if rebuilt.edges != s.cloud.edges {
                v.push("cloud edge list is not in canonical order".into());
            }
        }
        Err(e) => v.push(format!("cloud graph: {e}")),
    }

    if s.cloud.vehicles.len() < s.task.subtasks.len() {
        v.push(format!(
            "need at least as many vehicles as subtasks, got {} vehicles for {} subtasks",
            s.cloud.vehicles.len(),
            s.task.subtasks.len()
        ));
    }

    for vehicle in &s.cloud.vehicles {
        if vehicle.f_mean_ghz < clips.f_lo_ghz || vehicle.f_mean_ghz > clips.f_hi_ghz {
            v.push(format!(
                "vehicle {}: f_mean_ghz = {} lies outside the f clip [{}, {}]",
                vehicle.id, vehicle.f_mean_ghz, clips.f_lo_ghz, clips.f_hi_ghz
            ));
        }
        if vehicle.r_mean_mbps < clips.r_lo_mbps || vehicle.r_mean_mbps > clips.r_hi_mbps {
            v.push(format!(
                "vehicle {}: r_mean_mbps = {} lies outside the r clip [{}, {}]",
                vehicle.id, vehicle.r_mean_mbps, clips.r_lo_mbps, clips.r_hi_mbps
            ));
        }
    }
    for e in &s.cloud.edges {
        if e.c_mean < clips.c_lo || e.c_mean > clips.c_hi {
            v.push(format!(
                "edge ({}, {}): c_mean = {} lies outside the c clip [{}, {}]",
                e.a, e.b, e.c_mean, clips.c_lo, clips.c_hi
            ));
        }
    }

    v
}
