//! Oracle cross-checks and invariant sweeps behind the `validate` command.

use std::fmt;
use std::time::Instant;

use partial_reinit::hmm::{baum_welch_step, log_likelihood, random_model, HmmModel, ObsSeq};
use partial_reinit::kmeans::{forgy_init, lloyd_step, wcss, KMeans, PointSet};
use partial_reinit::kmedoids::{init_medoids, medoid_cost, pam_step, DissimilarityMatrix, KMedoids};
use partial_reinit::oracle::{
    finite_diff_gradient, hmm_bruteforce, kmeans_bruteforce, kmedoids_bruteforce, mc_validate_mlevel,
    rbm_bruteforce,
};
use partial_reinit::rbm::{exact_gradient, exact_objective, BinaryDataset, RbmParams};
use partial_reinit::rng::seeded;
use partial_reinit::{run_hierarchy, Budget, MLevelParams, Problem, ReinitSchedule, TraceRecord};
use rand::Rng;

use crate::error::Result;

/// Gradient under test in the RBM finite-difference check.
pub type GradientFn = fn(&RbmParams, &BinaryDataset, f64) -> partial_reinit::Result<RbmParams>;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{verdict} {}: {} ({:.2}s)", self.name, self.detail, self.seconds)
    }
}

fn timed(name: &str, body: impl FnOnce() -> Result<(bool, String)>) -> CheckResult {
    let start = Instant::now();
    let (passed, detail) = body().unwrap_or_else(|e| (false, format!("error: {e}")));
    CheckResult { name: name.to_string(), passed, detail, seconds: start.elapsed().as_secs_f64() }
}

fn random_seq<R: Rng + ?Sized>(len: usize, n_symbols: usize, rng: &mut R) -> Result<ObsSeq> {
    Ok(ObsSeq::new((0..len).map(|_| rng.random_range(0..n_symbols)).collect(), n_symbols)?)
}

fn rel_err(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

/// Scaled forward likelihood against path enumeration for `models` random
/// models with up to 4 states and sequences of up to 8 symbols.
pub fn check_hmm_oracle(models: usize, seed: u64) -> CheckResult {
    timed("hmm scaled forward vs path enumeration", || {
        let mut rng = seeded(seed);
        let mut worst: f64 = 0.0;
        for i in 0..models {
            let n_states = 1 + i % 4;
            let len = 1 + (i / 4) % 8;
            let n_symbols = rng.random_range(2..=3);
            let model = random_model(n_states, n_symbols, &mut rng);
            let seq = random_seq(len, n_symbols, &mut rng)?;
            worst = worst.max(rel_err(log_likelihood(&model, &seq)?, hmm_bruteforce(&model, &seq)?));
        }
        Ok((worst <= 1e-10, format!("{models} models, max relative error {worst:.2e} (limit 1e-10)")))
    })
}

fn random_rbm<R: Rng + ?Sized>(
    n_visible: usize,
    n_hidden: usize,
    sigma: f64,
    rng: &mut R,
) -> Result<(RbmParams, BinaryDataset)> {
    let params = RbmParams::gaussian(n_visible, n_hidden, sigma, rng);
    let samples = rng.random_range(1..=10);
    let bits = (0..samples * n_visible).map(|_| u8::from(rng.random::<bool>())).collect();
    Ok((params, BinaryDataset::new(n_visible, bits)?))
}

/// Exact objective against joint `(v, h)` enumeration, layers of up to 6
/// units.
pub fn check_rbm_objective(instances: usize, seed: u64) -> CheckResult {
    timed("rbm exact objective vs joint enumeration", || {
        let mut rng = seeded(seed);
        let mut worst: f64 = 0.0;
        for i in 0..instances {
            let (nv, nh) = (1 + i % 6, 1 + (i / 6) % 6);
            let (params, data) = random_rbm(nv, nh, 1.0, &mut rng)?;
            let lambda = if i % 2 == 0 { 0.0 } else { 0.05 };
            let exact = exact_objective(&params, &data, lambda)?;
            worst = worst.max(rel_err(exact, rbm_bruteforce(&params, &data, lambda)?));
        }
        Ok((worst <= 1e-12, format!("{instances} instances, max relative error {worst:.2e} (limit 1e-12)")))
    })
}

/// `gradient` against central differences of the exact objective with
/// step `1e-4`, with a nonzero weight penalty so its sign matters.
pub fn check_rbm_gradient(instances: usize, seed: u64, gradient: GradientFn) -> CheckResult {
    timed("rbm gradient vs finite differences", || {
        let mut rng = seeded(seed);
        let mut worst: f64 = 0.0;
        let lambda = 0.1;
        for i in 0..instances {
            let (nv, nh) = (1 + i % 6, 1 + (i / 6) % 6);
            let (params, data) = random_rbm(nv, nh, 0.5, &mut rng)?;
            let analytic = gradient(&params, &data, lambda)?.to_vec();
            let numeric = finite_diff_gradient(
                |x| exact_objective(&params.with_values(x), &data, lambda).unwrap_or(f64::NAN),
                &params.to_vec(),
                1e-4,
            )?;
            for (a, b) in analytic.iter().zip(&numeric) {
                let err = (a - b).abs();
                worst = if err.is_nan() { f64::INFINITY } else { worst.max(err) };
            }
        }
        Ok((worst < 1e-6, format!("{instances} instances, max abs error {worst:.2e} (limit 1e-6)")))
    })
}

fn random_points<R: Rng + ?Sized>(rng: &mut R, max_n: usize) -> Result<PointSet> {
    let n = rng.random_range(2..=max_n);
    let d = rng.random_range(1..=3);
    let coords = (0..n * d).map(|_| rng.random_range(-10.0..10.0)).collect();
    Ok(PointSet::new(n, d, coords)?)
}

fn random_dissimilarity<R: Rng + ?Sized>(rng: &mut R, max_n: usize) -> Result<DissimilarityMatrix> {
    let n = rng.random_range(2..=max_n);
    let pts: Vec<Vec<f64>> =
        (0..n).map(|_| vec![rng.random_range(0.0..10.0), rng.random_range(0.0..10.0)]).collect();
    Ok(DissimilarityMatrix::squared_euclidean(&pts)?)
}

const SLACK: f64 = 1e-12;

pub fn check_lloyd_monotone(cases: usize, seed: u64) -> CheckResult {
    timed("lloyd steps never increase wcss", || {
        let mut rng = seeded(seed);
        let mut steps = 0;
        for case in 0..cases {
            let data = random_points(&mut rng, 40)?;
            let k = rng.random_range(1..=data.len().min(6));
            let mut state = forgy_init(&data, k, &mut rng)?;
            let mut cost = wcss(&state, &data)?;
            for _ in 0..20 {
                state = lloyd_step(&state, &data, &mut rng)?;
                let next = wcss(&state, &data)?;
                steps += 1;
                if next > cost + SLACK * cost.abs() {
                    return Ok((false, format!("case {case}: wcss rose from {cost} to {next}")));
                }
                cost = next;
            }
        }
        Ok((true, format!("{cases} cases, {steps} steps")))
    })
}

pub fn check_pam_monotone(cases: usize, seed: u64) -> CheckResult {
    timed("pam iterations never increase medoid cost", || {
        let mut rng = seeded(seed);
        let mut steps = 0;
        for case in 0..cases {
            let d = random_dissimilarity(&mut rng, 40)?;
            let k = rng.random_range(1..=d.len().min(6));
            let mut state = init_medoids(&d, k, &mut rng)?;
            let mut cost = medoid_cost(&state, &d);
            for _ in 0..20 {
                let moved = pam_step(&mut state, &d)?;
                let next = medoid_cost(&state, &d);
                steps += 1;
                if next > cost + SLACK * cost.abs() {
                    return Ok((false, format!("case {case}: cost rose from {cost} to {next}")));
                }
                cost = next;
                if !moved {
                    break;
                }
            }
        }
        Ok((true, format!("{cases} cases, {steps} steps")))
    })
}

pub fn check_baum_welch_monotone(cases: usize, seed: u64) -> CheckResult {
    timed("baum-welch steps never decrease log-likelihood", || {
        let mut rng = seeded(seed);
        let mut worst_drop: f64 = 0.0;
        for _ in 0..cases {
            let n_states = rng.random_range(1..=5);
            let n_symbols = rng.random_range(2..=3);
            let seq = random_seq(rng.random_range(2..=32), n_symbols, &mut rng)?;
            let mut model: HmmModel = random_model(n_states, n_symbols, &mut rng);
            let mut ll = log_likelihood(&model, &seq)?;
            for _ in 0..10 {
                model = baum_welch_step(&model, &seq)?;
                let next = log_likelihood(&model, &seq)?;
                worst_drop = worst_drop.max(ll - next);
                ll = next;
            }
        }
        Ok((worst_drop <= 1e-9, format!("{cases} cases, largest drop {worst_drop:.2e} (slack 1e-9)")))
    })
}

fn trace_is_monotone(records: &[TraceRecord]) -> bool {
    records.windows(2).all(|w| {
        w[1].best_cost <= w[0].best_cost
            && w[1].cost_evaluations >= w[0].cost_evaluations
            && w[1].level0_calls >= w[0].level0_calls
            && w[1].wall_seconds >= w[0].wall_seconds
    })
}

pub fn check_trace_monotone(cases: usize, seed: u64) -> CheckResult {
    timed("run traces are monotone", || {
        let mut rng = seeded(seed);
        let mut records = 0;
        for case in 0..cases {
            let trace = if case % 2 == 0 {
                let data = random_points(&mut rng, 30)?;
                let k = rng.random_range(2..=data.len().min(5));
                let p = KMeans::new(&data, k)?;
                hierarchy_trace(&p, case as u64)?
            } else {
                let d = random_dissimilarity(&mut rng, 30)?;
                let k = rng.random_range(1..=d.len().min(5));
                let p = KMedoids::new(&d, k)?;
                hierarchy_trace(&p, case as u64)?
            };
            records += trace.len();
            if !trace_is_monotone(&trace) {
                return Ok((false, format!("case {case}: trace not monotone")));
            }
        }
        Ok((true, format!("{cases} runs, {records} records")))
    })
}

fn schedule_for(groups: usize) -> Result<ReinitSchedule> {
    Ok(if groups > 1 { ReinitSchedule::two_level(groups, 1, 5)? } else { ReinitSchedule::full(groups)? })
}

fn hierarchy_trace<P: Problem>(p: &P, seed: u64) -> Result<Vec<TraceRecord>> {
    let schedule = schedule_for(p.group_count())?;
    Ok(run_hierarchy(p, &schedule, &Budget::level0_calls(25), None, seed)?.records)
}

pub fn check_mlevel(trials: u64, seed: u64) -> CheckResult {
    timed("repetition count reaches 1 - delta", || {
        let rate = mc_validate_mlevel(MLevelParams::new(0.01, 0.1)?, trials, seed)?;
        let bound = 0.99 - 3.0 * (0.0099 / trials as f64).sqrt();
        Ok((rate >= bound, format!("success rate {rate:.4} over {trials} trials (bound {bound:.4})")))
    })
}

/// On instances small enough to enumerate, the hierarchy finds the global
/// optimum and never reports a cost below it.
pub fn check_optimum_agreement(cases: usize, seed: u64) -> CheckResult {
    timed("hierarchy reaches enumerated optima", || {
        let mut rng = seeded(seed);
        for case in 0..cases {
            let n = rng.random_range(4..=10);
            let k = rng.random_range(2..=3);
            let coords = (0..n).map(|_| rng.random_range(-10.0..10.0)).collect();
            let data = PointSet::new(n, 1, coords)?;
            let oracle = kmeans_bruteforce(&data, k)?.optimum_cost;
            let schedule = ReinitSchedule::two_level(k, 1, 20)?;
            let found = run_hierarchy(
                &KMeans::new(&data, k)?,
                &schedule,
                &Budget::level0_calls(400),
                None,
                case as u64,
            )?
            .best_cost();
            if rel_err(found, oracle) > 1e-12 {
                return Ok((false, format!("k-means case {case}: found {found}, optimum {oracle}")));
            }

            let d = random_dissimilarity(&mut rng, 12)?;
            let k = rng.random_range(1..=3.min(d.len()));
            let oracle = kmedoids_bruteforce(&d, k)?.optimum_cost;
            let schedule = schedule_for(k)?;
            let found = run_hierarchy(
                &KMedoids::new(&d, k)?,
                &schedule,
                &Budget::level0_calls(400),
                None,
                case as u64,
            )?
            .best_cost();
            if found < oracle - 1e-9 * oracle.abs() || rel_err(found, oracle) > 1e-12 {
                return Ok((false, format!("k-medoids case {case}: found {found}, optimum {oracle}")));
            }
        }
        Ok((true, format!("{cases} k-means and {cases} k-medoids instances")))
    })
}

#[derive(Debug, Clone, Copy)]
pub struct ValidateOptions {
    /// Multiplier on case counts; 1.0 is the full suite.
    pub scale: f64,
    pub seed: u64,
    pub rbm_gradient: GradientFn,
}

impl Default for ValidateOptions {
    fn default() -> Self {
        Self { scale: 1.0, seed: 0, rbm_gradient: exact_gradient }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub checks: Vec<CheckResult>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{c}")?;
        }
        let failed = self.failures().count();
        write!(f, "{} checks, {failed} failed", self.checks.len())
    }
}

pub fn validate_suite(opts: &ValidateOptions) -> ValidationReport {
    let n = |full: usize| ((full as f64 * opts.scale).ceil() as usize).max(1);
    let s = opts.seed;
    ValidationReport {
        checks: vec![
            check_hmm_oracle(n(100), s),
            check_rbm_objective(n(50), s + 1),
            check_rbm_gradient(n(50), s + 2, opts.rbm_gradient),
            check_lloyd_monotone(n(1000), s + 3),
            check_pam_monotone(n(1000), s + 4),
            check_baum_welch_monotone(n(1000), s + 5),
            check_trace_monotone(n(1000), s + 6),
            check_mlevel(n(10_000).max(10_000) as u64, s + 7),
            check_optimum_agreement(n(100), s + 8),
        ],
    }
}
