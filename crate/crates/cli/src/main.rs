//! `swats`: run scheduling experiments, compute offline plans, sweep
//! problem sizes, and validate configurations from the command line.
//!
//! Exit codes: 0 on success, 1 for configuration or usage problems, 2 for
//! runtime failures.

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use swats_core::harness::{
    run_experiment_with_plan, sweep, AlphaDocument, Config, SweepAxis, SweepPoint,
};
use swats_core::model::Topology;
use swats_core::scheduler::{plan_a, PlanAResult, Policy};
use swats_core::stochastic::RngStream;
use swats_core::{harness, prepare_scenario, RunSummary, Scenario};

const SEED_ENV: &str = "SWATS_SEED";

#[derive(Parser)]
#[command(
    name = "swats",
    version,
    about = "Stage-wise scheduler simulation for stochastic vehicular clouds"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured experiment and write the CSV and JSON results.
    Run(RunArgs),
    /// Compute the offline plan and persist it as a JSON document.
    PlanA(PlanAArgs),
    /// Re-run the experiment across a list of vehicle counts or topologies.
    Sweep(SweepArgs),
    /// Check a configuration and report every violation.
    Validate(ValidateArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Configuration file (.toml or .json); defaults apply when omitted.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Master seed; beats the SWATS_SEED environment variable and the
    /// config file.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Override the number of events.
    #[arg(long, value_name = "N")]
    events: Option<usize>,
    /// Override the Monte Carlo sample count.
    #[arg(long, value_name = "N")]
    samples: Option<usize>,
    /// Override the task topology (star, ring, tadpole).
    #[arg(long, value_name = "NAME")]
    topology: Option<String>,
    /// Override the number of subtasks.
    #[arg(long, value_name = "N")]
    subtasks: Option<usize>,
    /// Override the number of vehicles.
    #[arg(long, value_name = "N")]
    vehicles: Option<usize>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Comma-separated policies to run (e.g. SWATS,Onsite,ExSearch).
    #[arg(long, value_name = "LIST")]
    policies: Option<String>,
    /// Run events sequentially so decision timings are trustworthy.
    #[arg(long)]
    timed: bool,
    /// Reuse a persisted offline plan instead of recomputing it.
    #[arg(long, value_name = "PATH")]
    alpha: Option<PathBuf>,
    /// Override the CSV output path.
    #[arg(long, value_name = "PATH")]
    csv: Option<PathBuf>,
    /// Override the JSON summary output path.
    #[arg(long, value_name = "PATH")]
    summary: Option<PathBuf>,
}

#[derive(Args)]
struct PlanAArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Where to write the plan document.
    #[arg(long, value_name = "PATH", default_value = "alpha.json")]
    out: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Comma-separated vehicle counts (e.g. 6,9,12).
    #[arg(long, value_name = "LIST", conflicts_with = "topologies")]
    vehicles_list: Option<String>,
    /// Comma-separated topologies (e.g. star,ring,tadpole).
    #[arg(long, value_name = "LIST")]
    topologies: Option<String>,
    /// Directory for the per-point result files.
    #[arg(long, value_name = "DIR", default_value = "sweep")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct ValidateArgs {
    #[command(flatten)]
    common: CommonArgs,
}

/// A failure plus the exit code it deserves.
struct Failure {
    code: u8,
    err: anyhow::Error,
}

trait Phase<T> {
    /// Configuration and usage problems: exit 1.
    fn config_phase(self) -> Result<T, Failure>;
    /// Failures after a valid configuration: exit 2.
    fn runtime_phase(self) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> Phase<T> for Result<T, E> {
    fn config_phase(self) -> Result<T, Failure> {
        self.map_err(|e| Failure {
            code: 1,
            err: e.into(),
        })
    }

    fn runtime_phase(self) -> Result<T, Failure> {
        self.map_err(|e| Failure {
            code: 2,
            err: e.into(),
        })
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help and version requests are successes; everything else is a
            // usage error
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {:#}", failure.err);
            ExitCode::from(failure.code)
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::PlanA(args) => cmd_plan_a(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Validate(args) => cmd_validate(args),
    }
}

/// Loads the config and applies the shared overrides, seed precedence
/// included.
fn load_config(common: &CommonArgs) -> anyhow::Result<Config> {
    let mut cfg = match &common.config {
        Some(path) => Config::from_path(path)?,
        None => Config::default(),
    };
    if let Some(seed) = common.seed {
        cfg.master_seed = seed;
    } else if let Ok(text) = std::env::var(SEED_ENV) {
        cfg.master_seed = text
            .trim()
            .parse()
            .map_err(|_| anyhow!("{SEED_ENV} must be an unsigned integer, got {text:?}"))?;
    }
    if let Some(events) = common.events {
        cfg.n_events = events;
    }
    if let Some(samples) = common.samples {
        cfg.n_mc_samples = samples;
    }
    if let Some(name) = &common.topology {
        cfg.task.topology = Topology::from_str(name)?;
    }
    if let Some(n) = common.subtasks {
        cfg.task.n_subtasks = n;
    }
    if let Some(n) = common.vehicles {
        cfg.cloud.n_vehicles = n;
    }
    Ok(cfg)
}

fn cmd_run(args: RunArgs) -> Result<(), Failure> {
    let mut cfg = load_config(&args.common).config_phase()?;
    if let Some(list) = &args.policies {
        cfg.policies = parse_policies(list).config_phase()?;
    }
    if args.timed {
        cfg.timed = true;
    }
    if let Some(path) = &args.csv {
        cfg.output.csv_path = path.display().to_string();
    }
    if let Some(path) = &args.summary {
        cfg.output.summary_path = path.display().to_string();
    }

    let scenario = prepare_scenario(&cfg).config_phase()?;
    let plan = match &args.alpha {
        Some(path) => {
            let doc = AlphaDocument::load(path).config_phase()?;
            doc.verify(&scenario).config_phase()?;
            Some(doc.plan)
        }
        None => None,
    };

    let summary = run_experiment_with_plan(&cfg, plan).runtime_phase()?;
    let csv_path = PathBuf::from(&cfg.output.csv_path);
    let summary_path = PathBuf::from(&cfg.output.summary_path);
    harness::write_results(&summary, &csv_path, &summary_path).runtime_phase()?;

    print_run(&summary);
    println!(
        "wrote {} and {}",
        csv_path.display(),
        summary_path.display()
    );
    Ok(())
}

fn cmd_plan_a(args: PlanAArgs) -> Result<(), Failure> {
    let cfg = load_config(&args.common).config_phase()?;
    let scenario = prepare_scenario(&cfg).config_phase()?;
    let stream = RngStream::new(cfg.master_seed, "plan_a");
    let plan = plan_a(&scenario, cfg.n_mc_samples, &stream).runtime_phase()?;
    print_plan(&plan, &scenario);
    AlphaDocument::new(&scenario, plan)
        .save(&args.out)
        .runtime_phase()?;
    println!("wrote {}", args.out.display());
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> Result<(), Failure> {
    let cfg = load_config(&args.common).config_phase()?;
    let axis = match (&args.vehicles_list, &args.topologies) {
        (Some(list), None) => SweepAxis::Vehicles(parse_usize_list(list).config_phase()?),
        (None, Some(list)) => SweepAxis::Topologies(parse_topology_list(list).config_phase()?),
        (None, None) | (Some(_), Some(_)) => {
            return Err(anyhow!(
                "pass exactly one of --vehicles-list or --topologies"
            ))
            .config_phase()
        }
    };

    let points = sweep(&cfg, &axis).runtime_phase()?;
    std::fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("create sweep directory {}", args.out_dir.display()))
        .runtime_phase()?;
    for point in &points {
        write_point(point, &args.out_dir).runtime_phase()?;
        println!("{}", point_line(point));
    }
    println!("wrote {} sweep points to {}", points.len(), args.out_dir.display());
    Ok(())
}

fn cmd_validate(args: ValidateArgs) -> Result<(), Failure> {
    let cfg = load_config(&args.common).config_phase()?;
    let scenario = prepare_scenario(&cfg).config_phase()?;
    println!(
        "configuration OK: {} task with {} subtasks over {} vehicles, digest {}",
        scenario.task.topology_tag,
        scenario.task.n_subtasks(),
        scenario.cloud.n_vehicles(),
        scenario.digest()
    );
    Ok(())
}

fn parse_policies(list: &str) -> anyhow::Result<Vec<Policy>> {
    list.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| Policy::from_str(p).map_err(Into::into))
        .collect()
}

fn parse_usize_list(list: &str) -> anyhow::Result<Vec<usize>> {
    list.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| {
            p.parse()
                .map_err(|_| anyhow!("expected an unsigned integer, got {p:?}"))
        })
        .collect()
}

fn parse_topology_list(list: &str) -> anyhow::Result<Vec<Topology>> {
    list.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| Topology::from_str(p).map_err(Into::into))
        .collect()
}

fn fmt_opt(value: Option<f64>) -> String {
    value.map_or_else(|| "-".into(), |v| format!("{v:.6}"))
}

fn print_run(summary: &RunSummary) {
    let r = &summary.report;
    println!(
        "{} task, {} subtasks, {} vehicles, {} events, seed {}{}",
        r.topology,
        r.n_subtasks,
        r.n_vehicles,
        r.n_events,
        r.master_seed,
        if r.timed { ", timed" } else { "" }
    );
    if let Some(plan) = &r.plan_a {
        match &plan.alpha {
            Some(alpha) => println!(
                "plan: alpha {:?}, expected F {}, offline {:.3} s, {} candidates",
                alpha.as_slice(),
                fmt_opt(plan.expected_f),
                plan.offline_time_s,
                plan.candidates_considered
            ),
            None => println!(
                "plan: no mapping satisfies both risk thresholds ({} candidates)",
                plan.candidates_considered
            ),
        }
    }
    println!(
        "{:<11} {:>10} {:>13} {:>11} {:>12}",
        "policy", "AVCF", "ART", "completed", "alpha usage"
    );
    for p in &r.policies {
        let usage = p
            .alpha_usage_rate
            .map_or_else(|| "-".into(), |u| format!("{:.0}%", u * 100.0));
        println!(
            "{:<11} {:>10} {:>12.3e}s {:>8}/{:<3} {:>11}",
            p.policy.to_string(),
            fmt_opt(p.avcf),
            p.art_s,
            p.n_completed,
            p.n_events,
            usage
        );
    }
}

fn print_plan(plan: &PlanAResult, scenario: &Scenario) {
    match (&plan.alpha, &plan.risk_report) {
        (Some(alpha), Some(report)) => println!(
            "alpha {:?}: expected F {}, deadline risk {:.4} (<= {}), structure risk {:.4} (<= {}), {} candidates, offline {:.3} s",
            alpha.as_slice(),
            fmt_opt(plan.expected_f),
            report.risk_deadline,
            scenario.eps1,
            report.risk_structure,
            scenario.eps2,
            plan.candidates_considered,
            plan.offline_time_s
        ),
        _ => println!(
            "no mapping satisfies both risk thresholds ({} candidates, offline {:.3} s)",
            plan.candidates_considered, plan.offline_time_s
        ),
    }
}

fn point_line(point: &SweepPoint) -> String {
    let parts: Vec<String> = point
        .summary
        .report
        .policies
        .iter()
        .map(|p| format!("{} AVCF {}", p.policy, fmt_opt(p.avcf)))
        .collect();
    format!("{}: {}", point.label, parts.join(", "))
}

/// File stem like `vehicles_9` from a point label like `vehicles=9`.
fn point_stem(label: &str) -> String {
    label.replace('=', "_")
}

fn write_point(point: &SweepPoint, dir: &Path) -> swats_core::Result<()> {
    let stem = point_stem(&point.label);
    harness::write_results(
        &point.summary,
        &dir.join(format!("{stem}.csv")),
        &dir.join(format!("{stem}.json")),
    )
}
