// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use reinit_bench::aggregate::{aggregate_runs, format_curve, Axis, GridSpec};
use reinit_bench::config::ExperimentConfig;
use reinit_bench::experiment::{run_experiment, RunOptions};
use reinit_bench::formats::format_dataset;
use reinit_bench::generate::{generate_dataset, DatasetSpec};
use reinit_bench::validate::{validate_suite, ValidateOptions};
use reinit_bench::{BenchError, Result};

#[derive(Debug, Parser)]
#[command(name = "reinit-bench", version, about = "Partial vs full reinitialisation benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run every seed of an experiment and write traces plus a summary.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed_offset: u64,
        /// Parallel workers; 0 means one per CPU.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Write a synthetic dataset described by a JSON generator spec.
    GenData {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Aggregate a directory of traces into a median curve CSV.
    Aggregate {
        #[arg(long)]
        traces: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = Axis::Evals)]
        axis: Axis,
        #[arg(long, default_value_t = 200)]
        points: usize,
        #[arg(long)]
        max: Option<f64>,
    },
    /// Run the oracle cross-checks and invariant sweeps.
    Validate {
        /// Fraction of the full case counts to run.
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| BenchError::io(path, e))
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Run { config, out, seed_offset, jobs } => {
            let cfg = ExperimentConfig::load(&config)?;
            let base = config.parent().unwrap_or(Path::new("."));
            let exp = cfg.resolve(base)?;
            let summary = run_experiment(&exp, &out, RunOptions { jobs, seed_offset })?;
            println!(
                "{} runs, median final cost {}, config {}",
                summary.runs.len(),
                summary.median_final_cost,
                &summary.config_hash[..12]
            );
        }
        Command::GenData { config, out, seed } => {
            let text = fs::read_to_string(&config).map_err(|e| BenchError::io(&config, e))?;
            let spec: DatasetSpec = serde_json::from_str(&text)?;
            write(&out, &format_dataset(&generate_dataset(&spec, seed)?))?;
        }
        Command::Aggregate { traces, out, axis, points, max } => {
            let curve = aggregate_runs(&traces, &GridSpec { axis, points, max })?;
            write(&out, &format_curve(&curve))?;
            println!("{} runs, final median {}", curve.run_count, curve.final_median());
        }
        Command::Validate { scale, seed } => {
            if !(scale > 0.0) {
                return Err(BenchError::Config(format!("scale must be positive, got {scale}")));
            }
            let report = validate_suite(&ValidateOptions { scale, seed, ..ValidateOptions::default() });
            println!("{report}");
            if !report.passed() {
                return Err(BenchError::Validation(format!("{} checks failed", report.failures().count())));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
