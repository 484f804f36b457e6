//! Seeded runs of one experiment, written as trace files plus a summary.

use std::fs;
use std::path::{Path, PathBuf};

use log::info;
use partial_reinit::engine::RunStats;
use partial_reinit::hmm::HmmTraining;
use partial_reinit::kmeans::KMeans;
use partial_reinit::kmedoids::KMedoids;
use partial_reinit::rbm::{CdConfig, RbmTraining, ResetPolicy};
use partial_reinit::{Hierarchy, Problem, SubsetPicker, TraceRecord};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{Experiment, Mode, ProblemSpec};
use crate::error::{BenchError, Result};
use crate::formats::Dataset;
use crate::trace::format_trace;

#[derive(Debug, Clone, PartialEq)]
pub struct SeedOutcome {
    pub seed: u64,
    pub records: Vec<TraceRecord>,
    pub final_cost: f64,
    pub stats: RunStats,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    /// Worker threads; 0 uses rayon's default.
    pub jobs: usize,
    /// Added to every configured seed.
    pub seed_offset: u64,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { jobs: 1, seed_offset: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedSummary {
    pub seed: u64,
    pub final_cost: f64,
    pub level0_calls: u64,
    pub cost_evaluations: u64,
    pub wall_seconds: f64,
    pub trace_file: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub config_hash: String,
    pub problem: String,
    pub mode: Mode,
    pub seed_offset: u64,
    pub runs: Vec<SeedSummary>,
    pub median_final_cost: f64,
    pub total_level0_calls: u64,
    pub total_cost_evaluations: u64,
    pub total_wall_seconds: f64,
}

impl Summary {
    pub fn final_costs(&self) -> Vec<f64> {
        self.runs.iter().map(|r| r.final_cost).collect()
    }
}

pub fn trace_file_name(seed: u64) -> String {
    format!("trace_seed{seed}.csv")
}

fn run_with<P: Problem, K: SubsetPicker>(h: &Hierarchy<K>, problem: &P, seed: u64) -> Result<SeedOutcome> {
    let trace = h.run(problem, seed)?;
    Ok(SeedOutcome { seed, final_cost: trace.best_cost(), records: trace.records, stats: trace.stats })
}

/// One seeded run of `exp`.
pub fn run_seed(exp: &Experiment, seed: u64) -> Result<SeedOutcome> {
    let h = Hierarchy::new(exp.schedule.clone(), exp.budget)?.with_perturbation(exp.perturbation);
    match (&exp.config.problem, &exp.dataset) {
        (ProblemSpec::Kmeans { k }, Dataset::Points(p)) => run_with(&h, &KMeans::new(p, *k)?, seed),
        (ProblemSpec::Kmedoids { k }, Dataset::Dissimilarity(d)) => {
            run_with(&h, &KMedoids::new(d, *k)?, seed)
        }
        (ProblemSpec::Hmm { n_states }, Dataset::Bitstring(s)) => {
            run_with(&h, &HmmTraining::new(s, *n_states)?, seed)
        }
        (
            ProblemSpec::Rbm { n_hidden, learning_rate, epochs, gibbs_k, lambda, reset_prob, init_sigma },
            Dataset::RbmData(d),
        ) => {
            let cd = CdConfig::new(*gibbs_k, *learning_rate, *epochs, *lambda)?;
            let policy = ResetPolicy::new(*reset_prob, *init_sigma)?;
            let problem = RbmTraining::new(d, *n_hidden, cd, policy)?;
            run_with(&h.with_picker(problem.mask()), &problem, seed)
        }
        (p, d) => {
            Err(BenchError::Config(format!("problem {} cannot run on a {:?} instance", p.name(), d.kind())))
        }
    }
}

/// Runs every seed (shifted by `opts.seed_offset`) on `opts.jobs` workers.
/// Outcomes are returned in seed order.
pub fn run_seeds(exp: &Experiment, opts: RunOptions) -> Result<Vec<SeedOutcome>> {
    let seeds: Vec<u64> = exp.seeds.iter().map(|s| s + opts.seed_offset).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs)
        .build()
        .map_err(|e| BenchError::Config(format!("cannot start {} workers: {e}", opts.jobs)))?;
    pool.install(|| seeds.par_iter().map(|&s| run_seed(exp, s)).collect())
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| BenchError::io(path, e))
}

/// Runs `exp` and writes one trace CSV per seed, `config.json` and
/// `summary.json` into `out_dir`.
pub fn run_experiment(exp: &Experiment, out_dir: &Path, opts: RunOptions) -> Result<Summary> {
    fs::create_dir_all(out_dir).map_err(|e| BenchError::io(out_dir, e))?;
    let outcomes = run_seeds(exp, opts)?;
    let mut runs = Vec::with_capacity(outcomes.len());
    for o in &outcomes {
        let name = trace_file_name(o.seed);
        write(&out_dir.join(&name), &format_trace(&o.records))?;
        let last = o.records.last().copied().unwrap_or_default();
        runs.push(SeedSummary {
            seed: o.seed,
            final_cost: o.final_cost,
            level0_calls: o.stats.level0_calls,
            cost_evaluations: o.stats.cost_evaluations,
            wall_seconds: last.wall_seconds,
            trace_file: name,
        });
    }
    let mut finals: Vec<f64> = runs.iter().map(|r| r.final_cost).collect();
    let summary = Summary {
        config_hash: exp.config_hash.clone(),
        problem: exp.config.problem.name().to_string(),
        mode: exp.config.mode,
        seed_offset: opts.seed_offset,
        median_final_cost: median(&mut finals),
        total_level0_calls: runs.iter().map(|r| r.level0_calls).sum(),
        total_cost_evaluations: runs.iter().map(|r| r.cost_evaluations).sum(),
        total_wall_seconds: runs.iter().map(|r| r.wall_seconds).sum(),
        runs,
    };
    write(&out_dir.join("config.json"), &exp.config.to_json())?;
    write(
        &out_dir.join("summary.json"),
        &serde_json::to_string_pretty(&summary).expect("summary serialises"),
    )?;
    info!(
        "{} {:?}: {} runs, median final cost {}",
        summary.problem,
        summary.mode,
        summary.runs.len(),
        summary.median_final_cost
    );
    Ok(summary)
}

pub fn read_summary(dir: &Path) -> Result<Summary> {
    let path: PathBuf = dir.join("summary.json");
    let text = fs::read_to_string(&path).map_err(|e| BenchError::io(&path, e))?;
    Ok(serde_json::from_str(&text)?)
}
