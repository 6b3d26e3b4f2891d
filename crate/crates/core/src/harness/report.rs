//! Result shapes and serialization: per-event CSV rows and the aggregated
//! JSON run summary.
//!
//! CSV output is byte-deterministic for a given seed and config except for
//! the timing column; [`csv_without_timing`] strips it for comparisons.

use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::error::{Error, Result};
use crate::scheduler::{DecisionKind, EventDecision, PlanAResult, Policy};

pub const CSV_HEADER: &str =
    "event,policy,used,f_value,completion_time,exchange_cost,decision_time_s,feasible";

/// One policy decision on one event, flattened for the CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct EventRow {
    /// 1-based event number.
    pub event: usize,
    pub policy: Policy,
    pub used: DecisionKind,
    pub f_value: Option<f64>,
    pub completion_time_s: Option<f64>,
    pub exchange_cost: Option<f64>,
    pub decision_time_s: f64,
    pub feasible: bool,
}

impl EventRow {
    pub fn from_decision(event: usize, policy: Policy, d: &EventDecision) -> Self {
        Self {
            event,
            policy,
            used: d.used,
            f_value: d.cost.map(|c| c.f_value),
            completion_time_s: d.cost.map(|c| c.completion_time_s),
            exchange_cost: d.cost.map(|c| c.exchange_cost),
            decision_time_s: d.decision_time_s,
            feasible: d.used != DecisionKind::Failed,
        }
    }
}

/// Aggregate metrics for one policy over a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyReport {
    pub policy: Policy,
    pub n_events: usize,
    pub n_completed: usize,
    /// Fraction of events with a usable mapping.
    pub completion_rate: f64,
    /// Mean realized F over completed events; absent when none completed.
    pub avcf: Option<f64>,
    /// Mean decision time over all events, seconds.
    pub art_s: f64,
    /// Fraction of events where the offline mapping was kept; SWATS only.
    pub alpha_usage_rate: Option<f64>,
}

/// Aggregated description of one experiment run; this is the JSON summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub master_seed: u64,
    pub n_events: usize,
    pub n_mc_samples: usize,
    pub timed: bool,
    pub topology: crate::model::Topology,
    pub n_subtasks: usize,
    pub n_vehicles: usize,
    pub scenario_digest: String,
    pub plan_a: Option<PlanAResult>,
    pub policies: Vec<PolicyReport>,
}

/// Everything a run produces: the summary plus the per-event rows.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub report: RunReport,
    pub events: Vec<EventRow>,
}

impl RunSummary {
    pub fn csv(&self) -> String {
        csv_string(&self.events)
    }

    /// Report for one policy, if it ran.
    pub fn policy(&self, policy: Policy) -> Option<&PolicyReport> {
        self.report.policies.iter().find(|p| p.policy == policy)
    }
}

fn fmt_opt(value: Option<f64>) -> String {
    match value {
        Some(v) => format!("{v}"),
        None => String::new(),
    }
}

/// Renders rows as CSV, header included, in the given order.
pub fn csv_string(rows: &[EventRow]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.event,
            r.policy,
            r.used,
            fmt_opt(r.f_value),
            fmt_opt(r.completion_time_s),
            fmt_opt(r.exchange_cost),
            r.decision_time_s,
            r.feasible
        ));
    }
    out
}

/// Drops the `decision_time_s` column, leaving the deterministic part.
pub fn csv_without_timing(csv: &str) -> String {
    let timing_col = 6;
    csv.lines()
        .map(|line| {
            let fields: Vec<&str> = line.split(',').collect();
            fields
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != timing_col)
                .map(|(_, f)| *f)
                .collect::<Vec<_>>()
                .join(",")
        })
        .collect::<Vec<_>>()
        .join("\n")
        + "\n"
}

/// Builds per-policy aggregates, one entry per policy in the order given.
pub fn aggregate(policies: &[Policy], rows: &[EventRow], n_events: usize) -> Vec<PolicyReport> {
    policies
        .iter()
        .map(|&policy| {
            let mine: Vec<&EventRow> = rows.iter().filter(|r| r.policy == policy).collect();
            let n_completed = mine.iter().filter(|r| r.feasible).count();
            let avcf = if n_completed > 0 {
                Some(
                    mine.iter()
                        .filter_map(|r| r.f_value)
                        .sum::<f64>()
                        / n_completed as f64,
                )
            } else {
                None
            };
            let art_s = if mine.is_empty() {
                0.0
            } else {
                mine.iter().map(|r| r.decision_time_s).sum::<f64>() / mine.len() as f64
            };
            let alpha_usage_rate = (policy == Policy::Swats).then(|| {
                let kept = mine.iter().filter(|r| r.used == DecisionKind::Alpha).count();
                kept as f64 / n_events.max(1) as f64
            });
            PolicyReport {
                policy,
                n_events,
                n_completed,
                completion_rate: n_completed as f64 / n_events.max(1) as f64,
                avcf,
                art_s,
                alpha_usage_rate,
            }
        })
        .collect()
}

/// Writes the CSV and the JSON summary. Nothing is written until the run
/// has fully succeeded, so failures cannot leave partial results.
pub fn write_results(summary: &RunSummary, csv_path: &Path, summary_path: &Path) -> Result<()> {
    let io_err = |action: &'static str, path: &Path| {
        let path = path.display().to_string();
        move |source: std::io::Error| Error::Io {
            action,
            path,
            source,
        }
    };
    std::fs::write(csv_path, summary.csv()).map_err(io_err("write results CSV", csv_path))?;
    let mut json = serde_json::to_string_pretty(&summary.report).expect("report serialization is infallible");
    json.push('\n');
    std::fs::write(summary_path, json).map_err(io_err("write run summary", summary_path))?;
    Ok(())
}

/// Reads a previously written JSON summary.
pub fn read_report(path: &Path) -> Result<RunReport> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        action: "read run summary",
        path: path.display().to_string(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        what: "run summary JSON",
        detail: e.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(event: usize, policy: Policy, used: DecisionKind, f: Option<f64>, dt: f64) -> EventRow {
        EventRow {
            event,
            policy,
            used,
            f_value: f,
            completion_time_s: f.map(|x| x * 2.0),
            exchange_cost: f.map(|x| x / 2.0),
            decision_time_s: dt,
            feasible: used != DecisionKind::Failed,
        }
    }

    #[test]
    fn csv_layout_matches_contract() {
        let rows = vec![
            row(1, Policy::Swats, DecisionKind::Alpha, Some(0.5), 1e-6),
            row(1, Policy::Random, DecisionKind::Failed, None, 2e-6),
        ];
        let csv = csv_string(&rows);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines[1], "1,SWATS,alpha,0.5,1,0.25,0.000001,true");
        assert_eq!(lines[2], "1,Random,failed,,,,0.000002,false");
        assert_eq!(lines.len(), 3);
    }

    #[test]
    fn timing_column_is_stripped_cleanly() {
        let rows = vec![row(3, Policy::Onsite, DecisionKind::Beta, Some(1.25), 0.125)];
        let stripped = csv_without_timing(&csv_string(&rows));
        let lines: Vec<&str> = stripped.lines().collect();
        assert_eq!(
            lines[0],
            "event,policy,used,f_value,completion_time,exchange_cost,feasible"
        );
        assert_eq!(lines[1], "3,Onsite,beta,1.25,2.5,0.625,true");
        // rows differing only in timing collapse to the same bytes
        let other = vec![row(3, Policy::Onsite, DecisionKind::Beta, Some(1.25), 0.5)];
        assert_eq!(stripped, csv_without_timing(&csv_string(&other)));
    }

    #[test]
    fn aggregation_hand_checked() {
        let rows = vec![
            row(1, Policy::Swats, DecisionKind::Alpha, Some(1.0), 0.01),
            row(2, Policy::Swats, DecisionKind::Beta, Some(3.0), 0.03),
            row(3, Policy::Swats, DecisionKind::Failed, None, 0.02),
            row(1, Policy::Random, DecisionKind::Failed, None, 0.001),
            row(2, Policy::Random, DecisionKind::Failed, None, 0.001),
            row(3, Policy::Random, DecisionKind::Failed, None, 0.001),
        ];
        let reports = aggregate(&[Policy::Swats, Policy::Random], &rows, 3);
        let swats = &reports[0];
        assert_eq!(swats.n_completed, 2);
        assert!((swats.completion_rate - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(swats.avcf, Some(2.0));
        assert!((swats.art_s - 0.02).abs() < 1e-12);
        assert_eq!(swats.alpha_usage_rate, Some(1.0 / 3.0));
        let random = &reports[1];
        assert_eq!(random.avcf, None);
        assert_eq!(random.completion_rate, 0.0);
        assert_eq!(random.alpha_usage_rate, None);
    }

    #[test]
    fn float_formatting_is_plain_display() {
        assert_eq!(fmt_opt(Some(0.1)), "0.1");
        assert_eq!(fmt_opt(Some(1.0)), "1");
        assert_eq!(fmt_opt(Some(1e-9)), "0.000000001");
        assert_eq!(fmt_opt(None), "");
    }
}
