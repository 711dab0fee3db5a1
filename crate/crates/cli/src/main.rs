use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use spectral_mpc::scenario::{Scenario, ScenarioError, SweepParameter, SweepValue};
use spectral_mpc::sim::{self, RunMetrics};

mod output;

#[derive(Parser)]
#[command(name = "spectral-mpc", version, about = "Spectrally shaped switching control simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Default)]
pub enum Format {
    #[default]
    Csv,
    Jsonl,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write traces, spectra and metrics.
    Run {
        scenario: PathBuf,
        #[arg(long, short)]
        output: PathBuf,
        /// Overrides the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Run a scenario once per sweep value.
    Sweep {
        scenario: PathBuf,
        #[arg(long, short)]
        output: PathBuf,
        /// Sweep parameter; defaults to the scenario's `[sweep]` table.
        #[arg(long, value_parser = parse_parameter)]
        param: Option<SweepParameter>,
        /// Comma-separated values, e.g. `0,3,6` or `10,20,inf`.
        #[arg(long, value_delimiter = ',')]
        values: Vec<String>,
        #[arg(long)]
        seed: Option<u64>,
        /// Sweep points run in parallel.
        #[arg(long, default_value_t = 1)]
        threads: usize,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Check a scenario without running it.
    Validate { scenario: PathBuf },
    /// Recompute metrics from a run directory.
    Analyze {
        run: PathBuf,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
}

fn parse_parameter(s: &str) -> std::result::Result<SweepParameter, String> {
    match s {
        "lambda2" => Ok(SweepParameter::Lambda2),
        "horizon" | "M" | "m" => Ok(SweepParameter::Horizon),
        "k_max" | "kmax" => Ok(SweepParameter::KMax),
        _ => Err(format!("unknown sweep parameter {s}; use lambda2, horizon or k_max")),
    }
}

fn parse_value(s: &str) -> SweepValue {
    if let Ok(v) = s.parse::<i64>() {
        SweepValue::Int(v)
    } else if let Ok(v) = s.parse::<f64>() {
        if v.is_infinite() {
            SweepValue::Text("inf".into())
        } else {
            SweepValue::Float(v)
        }
    } else {
        SweepValue::Text(s.to_owned())
    }
}

fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Scenario::from_toml_str(&text).map_err(|e| report(path, &e))
}

fn report(path: &Path, e: &ScenarioError) -> anyhow::Error {
    let lines: Vec<String> = e.lines().iter().map(|l| format!("{}: {l}", path.display())).collect();
    anyhow::anyhow!("invalid scenario\n{}", lines.join("\n"))
}

fn run_one(scenario: &Scenario, dir: &Path, format: Format) -> Result<RunMetrics> {
    log::info!("running {} ({} steps)", scenario.name, scenario.steps());
    let artifacts = sim::run_scenario(scenario)?;
    let metrics = sim::analyze(&artifacts)?;
    output::write_run(dir, &artifacts, &metrics, format)?;
    Ok(metrics)
}

fn cmd_sweep(
    path: &Path,
    out: &Path,
    param: Option<SweepParameter>,
    values: &[String],
    seed: Option<u64>,
    threads: usize,
    format: Format,
) -> Result<()> {
    let mut base = load_scenario(path)?;
    if let Some(s) = seed {
        base.seed = s;
    }
    let (parameter, values) = match (param, values.is_empty(), &base.sweep) {
        (Some(p), false, _) => (p, values.iter().map(|v| parse_value(v)).collect::<Vec<_>>()),
        (None, true, Some(sw)) => (sw.parameter, sw.values.clone()),
        (Some(p), true, Some(sw)) if p == sw.parameter => (p, sw.values.clone()),
        _ => bail!("give --param and --values, or a [sweep] table in the scenario"),
    };
    let points: Vec<Scenario> = values
        .iter()
        .map(|v| base.with_sweep_value(parameter, v).map_err(|e| report(path, &e)))
        .collect::<Result<_>>()?;
    fs::create_dir_all(out)?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads.max(1)).build()?;
    let results: Vec<Result<RunMetrics>> = pool.install(|| {
        points
            .par_iter()
            .map(|sc| run_one(sc, &out.join(&sc.name), format))
            .collect()
    });
    let rows: Vec<(String, &RunMetrics)> = values
        .iter()
        .zip(&results)
        .filter_map(|(v, r)| r.as_ref().ok().map(|m| (v.to_string(), m)))
        .collect();
    output::write_aggregate(&out.join("aggregate.csv"), parameter, &rows)?;
    let failures: Vec<String> = values
        .iter()
        .zip(&results)
        .filter_map(|(v, r)| r.as_ref().err().map(|e| format!("{parameter}={v}: {e:#}")))
        .collect();
    if !failures.is_empty() {
        bail!("{} of {} sweep points failed\n{}", failures.len(), values.len(), failures.join("\n"));
    }
    Ok(())
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { scenario, output, seed, format } => {
            let mut sc = load_scenario(&scenario)?;
            if let Some(s) = seed {
                sc.seed = s;
            }
            run_one(&sc, &output, format)?;
        }
        Command::Sweep { scenario, output, param, values, seed, threads, format } => {
            cmd_sweep(&scenario, &output, param, &values, seed, threads, format)?;
        }
        Command::Validate { scenario } => {
            load_scenario(&scenario)?;
            println!("ok");
        }
        Command::Analyze { run, output } => {
            let artifacts = output::read_run(&run)?;
            let metrics = sim::analyze(&artifacts)?;
            let dest = output.unwrap_or_else(|| run.join("metrics.json"));
            output::write_metrics(&dest, &metrics)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
