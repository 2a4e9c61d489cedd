use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use procache::experiment::{
    emit_csv, emit_plot, load_scenario, load_sweep_spec, run_sweep_with, PlotMetric, RunMetadata, Scheme, SweepOutcome,
    SweepSpec,
};
use procache::solver::{
    evaluate_chain, greedy_coop, greedy_noncoop, solve_exhaustive_coop_with, solve_exhaustive_noncoop_with, SolveResult,
};
use procache::{Error, Exec, Scenario};
use serde_json::json;

/// Proactive RSU caching: validate scenarios, solve placements, run sweeps.
#[derive(Parser)]
#[command(name = "procache", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a scenario file and list every problem found.
    Validate {
        #[arg(short, long)]
        scenario: PathBuf,
    },
    /// Compute cache placements for one scenario.
    Solve {
        #[arg(short, long)]
        scenario: PathBuf,
        #[arg(long, value_enum, default_value_t = SchemeArg::CoopGreedy)]
        scheme: SchemeArg,
        /// Cost per cached item; defaults to the scenario's.
        #[arg(long)]
        gamma: Option<f64>,
        /// Redraw the vehicle population with this seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Write the result here as JSON instead of printing it.
        #[arg(short, long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = ExecArg::Parallel)]
        exec: ExecArg,
    },
    /// Run a sweep and write its table as CSV.
    Sweep {
        #[arg(short, long)]
        scenario: PathBuf,
        #[arg(short = 'x', long)]
        spec: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        /// Also plot per-file delay to this SVG file.
        #[arg(long)]
        plot: Option<PathBuf>,
        /// Overrides the spec's base seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum, default_value_t = ExecArg::Parallel)]
        exec: ExecArg,
    },
    /// Run a sweep and plot one metric against cache size as SVG.
    Plot {
        #[arg(short, long)]
        scenario: PathBuf,
        #[arg(short = 'x', long)]
        spec: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = MetricArg::Delay)]
        metric: MetricArg,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum, default_value_t = ExecArg::Parallel)]
        exec: ExecArg,
    },
}

#[derive(Clone, Copy, ValueEnum)]
#[value(rename_all = "snake_case")]
enum SchemeArg {
    NoncoopGreedy,
    NoncoopOptimal,
    CoopGreedy,
    CoopOptimal,
}

#[derive(Clone, Copy, ValueEnum)]
enum ExecArg {
    Sequential,
    Parallel,
}

impl From<ExecArg> for Exec {
    fn from(e: ExecArg) -> Exec {
        match e {
            ExecArg::Sequential => Exec::Sequential,
            ExecArg::Parallel => Exec::Parallel,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricArg {
    Delay,
    Objective,
}

const EXIT_INVALID: u8 = 1;
const EXIT_NOTHING_RUN: u8 = 2;
const EXIT_IO: u8 = 3;

/// Every sweep cell was skipped.
#[derive(Debug)]
struct NothingRan(String);

impl std::fmt::Display for NothingRan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "every sweep cell was skipped: {}", self.0)
    }
}

impl std::error::Error for NothingRan {}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<NothingRan>().is_some() {
        return EXIT_NOTHING_RUN;
    }
    if err.downcast_ref::<std::io::Error>().is_some() {
        return EXIT_IO;
    }
    match err.downcast_ref::<Error>() {
        Some(Error::EnumerationLimit { .. }) => EXIT_NOTHING_RUN,
        Some(Error::Io(_) | Error::Csv(_) | Error::Plot(_)) => EXIT_IO,
        _ => EXIT_INVALID,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}

fn scenario(path: &Path) -> anyhow::Result<Scenario> {
    load_scenario(path).with_context(|| format!("loading scenario {}", path.display()))
}

fn spec(path: &Path, seed: Option<u64>) -> anyhow::Result<SweepSpec> {
    let mut spec = load_sweep_spec(path).with_context(|| format!("loading sweep spec {}", path.display()))?;
    if let Some(seed) = seed {
        spec.base_seed = seed;
    }
    Ok(spec)
}

fn sweep(scenario: &Scenario, spec: &SweepSpec, exec: Exec) -> anyhow::Result<SweepOutcome> {
    let outcome = run_sweep_with(scenario, spec, exec)?;
    let mut reasons: BTreeMap<(Scheme, &str), usize> = BTreeMap::new();
    for cell in &outcome.skipped {
        *reasons.entry((cell.scheme, cell.reason.as_str())).or_default() += 1;
    }
    for ((scheme, reason), count) in reasons {
        eprintln!("skipped {count} {scheme} cells: {reason}");
    }
    if outcome.rows.is_empty() {
        let reason = outcome.skipped.first().map_or("no cells", |c| c.reason.as_str());
        bail!(NothingRan(reason.to_string()));
    }
    Ok(outcome)
}

fn run(command: Command) -> anyhow::Result<()> {
    match command {
        Command::Validate { scenario: path } => {
            let s = scenario(&path)?;
            println!(
                "{}: ok ({} items, {} RSUs, {} vehicles)",
                path.display(),
                s.library.item_count,
                s.rsus.len(),
                s.vehicles.len()
            );
            Ok(())
        }
        Command::Solve {
            scenario: path,
            scheme,
            gamma,
            seed,
            out,
            exec,
        } => {
            let mut s = scenario(&path)?;
            if let Some(seed) = seed {
                s = s.reseeded(seed)?;
            }
            if let Some(gamma) = gamma {
                s.cost_factor = gamma;
            }
            let exec = Exec::from(exec);
            let (name, result) = match scheme {
                SchemeArg::NoncoopGreedy => (Scheme::NoncoopGreedy, per_rsu(&s, greedy_noncoop)?),
                SchemeArg::NoncoopOptimal => (
                    Scheme::NoncoopOptimal,
                    per_rsu(&s, |s, r| solve_exhaustive_noncoop_with(s, r, exec))?,
                ),
                SchemeArg::CoopGreedy => (Scheme::CoopGreedy, greedy_coop(&s)?),
                SchemeArg::CoopOptimal => (Scheme::CoopOptimal, solve_exhaustive_coop_with(&s, exec)?),
            };
            let chain = evaluate_chain(&s, &result.policies)?;
            let rsus: Vec<_> = chain
                .reports
                .iter()
                .zip(&result.policies)
                .enumerate()
                .map(|(i, (report, policy))| {
                    json!({
                        "rsu": i,
                        "cached_items": policy.cached_items().map(|m| m + 1).collect::<Vec<_>>(),
                        "proactive_per_file_delay_s": report.proactive_per_file(),
                        "reactive_per_file_delay_s": report.reactive_per_file(),
                    })
                })
                .collect();
            let doc = json!({
                "scheme": name.name(),
                "cost_factor": s.cost_factor,
                "rng_seed": s.rng_seed,
                "objective": result.objective_value,
                "evaluations": result.evaluations,
                "mean_per_file_delay_s": chain.mean_per_file(),
                "rsus": rsus,
            });
            let text = serde_json::to_string_pretty(&doc)? + "\n";
            match out {
                Some(path) => std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?,
                None => print!("{text}"),
            }
            Ok(())
        }
        Command::Sweep {
            scenario: path,
            spec: spec_path,
            out,
            plot,
            seed,
            exec,
        } => {
            let s = scenario(&path)?;
            let spec = spec(&spec_path, seed)?;
            let outcome = sweep(&s, &spec, exec.into())?;
            emit_csv(&outcome.rows, &out).with_context(|| format!("writing {}", out.display()))?;
            let meta = out.with_extension("meta.json");
            RunMetadata::new(&s, &spec, outcome.skipped.len())
                .write(&meta)
                .with_context(|| format!("writing {}", meta.display()))?;
            if let Some(plot) = plot {
                emit_plot(&outcome.rows, &plot, PlotMetric::PerFileDelay)
                    .with_context(|| format!("writing {}", plot.display()))?;
            }
            println!(
                "{} rows, {} skipped -> {}",
                outcome.rows.len(),
                outcome.skipped.len(),
                out.display()
            );
            Ok(())
        }
        Command::Plot {
            scenario: path,
            spec: spec_path,
            out,
            metric,
            seed,
            exec,
        } => {
            let s = scenario(&path)?;
            let spec = spec(&spec_path, seed)?;
            let outcome = sweep(&s, &spec, exec.into())?;
            let metric = match metric {
                MetricArg::Delay => PlotMetric::PerFileDelay,
                MetricArg::Objective => PlotMetric::Objective,
            };
            emit_plot(&outcome.rows, &out, metric).with_context(|| format!("writing {}", out.display()))?;
            println!("plotted {} rows -> {}", outcome.rows.len(), out.display());
            Ok(())
        }
    }
}

/// Runs a single-RSU solver at every RSU and merges the placements.
fn per_rsu(
    s: &Scenario,
    solve: impl Fn(&Scenario, usize) -> procache::Result<SolveResult>,
) -> anyhow::Result<SolveResult> {
    let mut merged = SolveResult {
        policies: Vec::new(),
        objective_value: 0.0,
        evaluations: 0,
    };
    for r in 0..s.rsus.len() {
        let part = solve(s, r)?;
        merged.policies.extend(part.policies);
        merged.objective_value += part.objective_value;
        merged.evaluations += part.evaluations;
    }
    Ok(merged)
}
