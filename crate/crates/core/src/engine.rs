//! The hierarchical partial-reinitialisation engine.
//!
//! Level 0 is the problem's own local optimiser. Every level `l >= 1`
//! repeats `M_l` times: snapshot the configuration, reinitialise `k_l`
//! groups, run level `l - 1`, and restore the snapshot if the result is
//! worse. The top level always reinitialises every group and repeats until
//! the [`Budget`] runs out (or its own repeat count, if one is given).
//!
//! Every repetition reinitialises afresh and owns its snapshot; a level
//! never reinitialises once up front and then loops.

use std::ops::ControlFlow;
use std::time::Instant;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::rng::{self, Stream, StreamRng};

/// An optimisation problem the engine can drive.
///
/// Costs are minimised. A configuration is split into `group_count()`
/// variable groups; a group is the unit of reinitialisation.
pub trait Problem {
    type State: Clone;

    fn group_count(&self) -> usize;

    fn cost(&self, state: &Self::State) -> f64;

    /// A fresh random configuration with every group initialised.
    fn full_init<R: Rng + ?Sized>(&self, rng: &mut R) -> Self::State;

    /// Runs the inner optimiser to its local optimum, in place.
    fn local_optimise<R: Rng + ?Sized>(&self, state: &mut Self::State, rng: &mut R) -> Result<LocalOutcome>;

    /// Resamples only the named groups. `perturbation`, when present, asks
    /// for a blend of the old value and noise instead of the backend's
    /// native resampling; backends without a continuous parametrisation
    /// ignore it.
    fn reinit_groups<R: Rng + ?Sized>(
        &self,
        state: &mut Self::State,
        groups: &[usize],
        perturbation: Option<&PerturbationSpec>,
        rng: &mut R,
    );
}

/// Result of one level-0 call.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalOutcome {
    /// Cost of the configuration the optimiser left behind.
    pub cost: f64,
    /// Objective evaluations spent (inner iterations for iterative optimisers).
    pub evaluations: u64,
    /// False when an iteration cap stopped the optimiser early.
    pub converged: bool,
}

/// A problem state together with its cost, once known.
#[derive(Debug, Clone, PartialEq)]
pub struct Configuration<S> {
    state: S,
    cached_cost: Option<f64>,
}

impl<S> Configuration<S> {
    pub fn new(state: S) -> Self {
        Self { state, cached_cost: None }
    }

    pub fn with_cost(state: S, cost: f64) -> Self {
        Self { state, cached_cost: Some(cost) }
    }

    pub fn state(&self) -> &S {
        &self.state
    }

    pub fn cached_cost(&self) -> Option<f64> {
        self.cached_cost
    }

    pub fn into_state(self) -> S {
        self.state
    }

    fn cost_with<P>(&mut self, problem: &P, evals: &mut u64) -> f64
    where
        P: Problem<State = S>,
    {
        match self.cached_cost {
            Some(c) => c,
            None => {
                let c = problem.cost(&self.state);
                *evals += 1;
                self.cached_cost = Some(c);
                c
            }
        }
    }
}

/// One level of the hierarchy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Level {
    /// Number of groups reinitialised per repetition (`k_l`).
    pub subset_size: usize,
    /// Repetitions per entry into this level (`M_l`). `None` means
    /// unbounded and is only allowed at the top.
    pub repeats: Option<u64>,
}

impl Level {
    pub fn new(subset_size: usize, repeats: u64) -> Self {
        Self { subset_size, repeats: Some(repeats) }
    }

    pub fn unbounded(subset_size: usize) -> Self {
        Self { subset_size, repeats: None }
    }
}

/// Subset sizes and repetition counts for levels `1..=m`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReinitSchedule {
    levels: Vec<Level>,
}

impl ReinitSchedule {
    pub fn new(levels: Vec<Level>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::Config("schedule needs at least one level".into()));
        }
        let top = levels.len() - 1;
        for (i, level) in levels.iter().enumerate() {
            if level.subset_size == 0 {
                return Err(Error::Config(format!("level {} has subset size 0", i + 1)));
            }
            match level.repeats {
                Some(0) => return Err(Error::Config(format!("level {} has zero repeats", i + 1))),
                None if i != top => {
                    return Err(Error::Config(format!(
                        "only the top level may repeat without bound (level {})",
                        i + 1
                    )))
                }
                _ => {}
            }
            if i > 0 && levels[i - 1].subset_size >= level.subset_size {
                return Err(Error::Config(format!(
                    "subset sizes must strictly increase: level {} has {} after {}",
                    i + 1,
                    level.subset_size,
                    levels[i - 1].subset_size
                )));
            }
        }
        Ok(Self { levels })
    }

    /// The restart baseline: one level that reinitialises everything.
    pub fn full(group_count: usize) -> Result<Self> {
        Self::new(vec![Level::unbounded(group_count)])
    }

    /// One partial level under unbounded full restarts.
    pub fn two_level(group_count: usize, subset_size: usize, repeats: u64) -> Result<Self> {
        Self::new(vec![Level::new(subset_size, repeats), Level::unbounded(group_count)])
    }

    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    /// Size of the top level, which must equal the problem's group count.
    pub fn top_size(&self) -> usize {
        self.levels[self.levels.len() - 1].subset_size
    }

    pub fn check_group_count(&self, group_count: usize) -> Result<()> {
        if self.top_size() != group_count {
            return Err(Error::Config(format!(
                "top level reinitialises {} groups but the problem has {}",
                self.top_size(),
                group_count
            )));
        }
        Ok(())
    }
}

/// Parameters of the partial perturbation `x <- alpha*x + (1-alpha)*N(mu, sigma)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbationSpec {
    alpha: f64,
    mu: f64,
    sigma: f64,
}

impl PerturbationSpec {
    pub fn new(alpha: f64, mu: f64, sigma: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::Domain(format!("alpha must lie in [0, 1], got {alpha}")));
        }
        if !(sigma >= 0.0) || !sigma.is_finite() {
            return Err(Error::Domain(format!("sigma must be finite and >= 0, got {sigma}")));
        }
        if !mu.is_finite() {
            return Err(Error::Domain(format!("mu must be finite, got {mu}")));
        }
        Ok(Self { alpha, mu, sigma })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }
}

/// Blends `x` with one normal draw: `alpha*x + (1-alpha)*N(mu, sigma)`.
pub fn perturb_value<R: Rng + ?Sized>(x: f64, spec: &PerturbationSpec, rng: &mut R) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    let noise = spec.mu + spec.sigma * z;
    spec.alpha * x + (1.0 - spec.alpha) * noise
}

/// Stopping bounds for a run. At least one must be set.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Budget {
    pub max_level0_calls: Option<u64>,
    pub max_cost_evaluations: Option<u64>,
    pub max_wall_seconds: Option<f64>,
}

impl Budget {
    pub fn level0_calls(n: u64) -> Self {
        Self { max_level0_calls: Some(n), ..Self::default() }
    }

    pub fn cost_evaluations(n: u64) -> Self {
        Self { max_cost_evaluations: Some(n), ..Self::default() }
    }

    pub fn wall_seconds(s: f64) -> Self {
        Self { max_wall_seconds: Some(s), ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_level0_calls.is_none()
            && self.max_cost_evaluations.is_none()
            && self.max_wall_seconds.is_none()
        {
            return Err(Error::Config("budget has no bound set".into()));
        }
        if self.max_level0_calls == Some(0) || self.max_cost_evaluations == Some(0) {
            return Err(Error::Config("budget bounds must be positive".into()));
        }
        if let Some(s) = self.max_wall_seconds {
            if !(s > 0.0) {
                return Err(Error::Config(format!("wall-time bound must be positive, got {s}")));
            }
        }
        Ok(())
    }

    fn exhausted(&self, level0_calls: u64, evals: u64, seconds: f64) -> bool {
        self.max_level0_calls.is_some_and(|m| level0_calls >= m)
            || self.max_cost_evaluations.is_some_and(|m| evals >= m)
            || self.max_wall_seconds.is_some_and(|m| seconds >= m)
    }
}

/// Confidence parameters for choosing `M_l`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MLevelParams {
    delta: f64,
    epsilon: f64,
}

impl MLevelParams {
    pub fn new(delta: f64, epsilon: f64) -> Result<Self> {
        let open_unit = |v: f64| v > 0.0 && v < 1.0;
        if !open_unit(delta) {
            return Err(Error::Domain(format!("delta must lie in (0, 1), got {delta}")));
        }
        if !open_unit(epsilon) {
            return Err(Error::Domain(format!("epsilon must lie in (0, 1), got {epsilon}")));
        }
        Ok(Self { delta, epsilon })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
}

/// Smallest repetition count after which, if each attempt improves with
/// probability at least `epsilon`, at least one improvement has happened
/// with probability at least `1 - delta`: `ceil(ln delta / ln(1 - epsilon))`.
/// Ratios within rounding error of an integer count as that integer.
pub fn required_reinits(params: MLevelParams) -> u64 {
    let ratio = params.delta.ln() / (-params.epsilon).ln_1p();
    let snapped = if (ratio - ratio.round()).abs() <= 1e-9 * ratio.abs() { ratio.round() } else { ratio };
    (snapped.ceil() as u64).max(1)
}

/// Uniformly random `k`-subset of `0..n_groups`, sorted ascending.
pub fn pick_random_subset<R: Rng + ?Sized>(n_groups: usize, k: usize, rng: &mut R) -> Result<Vec<usize>> {
    if k > n_groups {
        return Err(Error::Domain(format!("cannot pick {k} of {n_groups} groups")));
    }
    if k == n_groups {
        return Ok((0..n_groups).collect());
    }
    let mut picked = rand::seq::index::sample(rng, n_groups, k).into_vec();
    picked.sort_unstable();
    Ok(picked)
}

/// Chooses which groups a level reinitialises.
pub trait SubsetPicker {
    /// Indices in `0..n_groups`. `k` is the level's nominal subset size;
    /// `k == n_groups` always means every group.
    fn pick<R: Rng + ?Sized>(&self, n_groups: usize, k: usize, rng: &mut R) -> Vec<usize>;
}

/// Uniform random subsets of exactly `k` groups.
#[derive(Debug, Clone, Copy, Default)]
pub struct UniformSubsets;

impl SubsetPicker for UniformSubsets {
    fn pick<R: Rng + ?Sized>(&self, n_groups: usize, k: usize, rng: &mut R) -> Vec<usize> {
        pick_random_subset(n_groups, k.min(n_groups), rng).unwrap_or_default()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Accept,
    Revert,
}

/// Keep the new configuration unless it is strictly worse than the checkpoint.
pub fn checkpoint_accept(cost_new: f64, cost_checkpoint: f64) -> Result<Decision> {
    if cost_new.is_nan() || cost_checkpoint.is_nan() {
        return Err(Error::Numeric(format!(
            "NaN cost at checkpoint comparison (new {cost_new}, checkpoint {cost_checkpoint})"
        )));
    }
    Ok(if cost_new > cost_checkpoint { Decision::Revert } else { Decision::Accept })
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TraceRecord {
    pub cost_evaluations: u64,
    pub level0_calls: u64,
    pub wall_seconds: f64,
    pub best_cost: f64,
}

/// Appends `record`, rejecting any regression of the best cost or of the counters.
pub fn record_trace(records: &mut Vec<TraceRecord>, record: TraceRecord) -> Result<()> {
    if let Some(last) = records.last() {
        if record.best_cost > last.best_cost {
            return Err(Error::Invariant(format!(
                "best cost regressed from {} to {}",
                last.best_cost, record.best_cost
            )));
        }
        if record.cost_evaluations < last.cost_evaluations
            || record.level0_calls < last.level0_calls
            || record.wall_seconds < last.wall_seconds
        {
            return Err(Error::Invariant("trace counters went backwards".into()));
        }
    }
    records.push(record);
    Ok(())
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RunStats {
    pub level0_calls: u64,
    pub cost_evaluations: u64,
    /// Reinitialisations performed at each level (index 0 is level 1).
    pub reinits: Vec<u64>,
    /// Checkpoint restores at each level.
    pub reverts: Vec<u64>,
    /// Level-0 calls that hit their iteration cap.
    pub unconverged: u64,
}

#[derive(Debug, Clone)]
pub struct RunTrace<S> {
    pub records: Vec<TraceRecord>,
    pub final_best: Configuration<S>,
    pub seed: u64,
    pub stats: RunStats,
}

impl<S> RunTrace<S> {
    pub fn best_cost(&self) -> f64 {
        self.final_best.cached_cost.unwrap_or(f64::INFINITY)
    }
}

/// A configured hierarchy, reusable across seeds and problems.
#[derive(Debug, Clone)]
pub struct Hierarchy<K = UniformSubsets> {
    schedule: ReinitSchedule,
    budget: Budget,
    perturbation: Option<PerturbationSpec>,
    picker: K,
}

impl Hierarchy<UniformSubsets> {
    pub fn new(schedule: ReinitSchedule, budget: Budget) -> Result<Self> {
        budget.validate()?;
        Ok(Self { schedule, budget, perturbation: None, picker: UniformSubsets })
    }
}

impl<K: SubsetPicker> Hierarchy<K> {
    pub fn with_perturbation(mut self, perturbation: Option<PerturbationSpec>) -> Self {
        self.perturbation = perturbation;
        self
    }

    pub fn with_picker<K2: SubsetPicker>(self, picker: K2) -> Hierarchy<K2> {
        Hierarchy { schedule: self.schedule, budget: self.budget, perturbation: self.perturbation, picker }
    }

    pub fn schedule(&self) -> &ReinitSchedule {
        &self.schedule
    }

    pub fn budget(&self) -> &Budget {
        &self.budget
    }

    /// Runs the hierarchy from a fresh random configuration. All randomness
    /// derives from `seed`.
    pub fn run<P: Problem>(&self, problem: &P, seed: u64) -> Result<RunTrace<P::State>> {
        self.schedule.check_group_count(problem.group_count())?;
        self.budget.validate()?;

        let start = Instant::now();
        let mut reinit_rng = rng::stream(seed, Stream::Reinit);
        let mut x = Configuration::new(problem.full_init(&mut reinit_rng));
        let mut evals = 0;
        let initial_cost = x.cost_with(problem, &mut evals);
        if initial_cost.is_nan() {
            return Err(Error::Numeric("initial configuration has NaN cost".into()));
        }

        let depth = self.schedule.levels.len();
        let mut run = Run {
            problem,
            levels: &self.schedule.levels,
            picker: &self.picker,
            perturbation: self.perturbation.as_ref(),
            budget: &self.budget,
            subsets_rng: rng::stream(seed, Stream::Subsets),
            reinit_rng,
            local_rng: rng::stream(seed, Stream::Local),
            start,
            evals,
            best: x.clone(),
            records: Vec::new(),
            stats: RunStats { reinits: vec![0; depth], reverts: vec![0; depth], ..RunStats::default() },
        };
        run.push_record()?;
        // Break and Continue both end the run once the top level returns.
        let _ = run.run_level(depth, &mut x)?;

        run.stats.cost_evaluations = run.evals;
        Ok(RunTrace { records: run.records, final_best: run.best, seed, stats: run.stats })
    }
}

/// Runs `problem` under `schedule` with uniform random subsets.
pub fn run_hierarchy<P: Problem>(
    problem: &P,
    schedule: &ReinitSchedule,
    budget: &Budget,
    perturbation: Option<&PerturbationSpec>,
    seed: u64,
) -> Result<RunTrace<P::State>> {
    Hierarchy::new(schedule.clone(), *budget)?.with_perturbation(perturbation.copied()).run(problem, seed)
}

struct Run<'a, P: Problem, K> {
    problem: &'a P,
    levels: &'a [Level],
    picker: &'a K,
    perturbation: Option<&'a PerturbationSpec>,
    budget: &'a Budget,
    subsets_rng: StreamRng,
    reinit_rng: StreamRng,
    local_rng: StreamRng,
    start: Instant,
    evals: u64,
    best: Configuration<P::State>,
    records: Vec<TraceRecord>,
    stats: RunStats,
}

impl<P: Problem, K: SubsetPicker> Run<'_, P, K> {
    fn run_level(&mut self, level: usize, x: &mut Configuration<P::State>) -> Result<ControlFlow<()>> {
        if level == 0 {
            return self.optimise(x);
        }
        let spec = self.levels[level - 1];
        let n = self.problem.group_count();
        let mut done = 0u64;
        while spec.repeats.map_or(true, |m| done < m) {
            done += 1;
            let mut checkpoint = x.clone();
            let groups = self.picker.pick(n, spec.subset_size, &mut self.subsets_rng);
            self.problem.reinit_groups(&mut x.state, &groups, self.perturbation, &mut self.reinit_rng);
            x.cached_cost = None;
            self.stats.reinits[level - 1] += 1;

            let flow = self.run_level(level - 1, x)?;

            let new_cost = x.cost_with(self.problem, &mut self.evals);
            let old_cost = checkpoint.cost_with(self.problem, &mut self.evals);
            if checkpoint_accept(new_cost, old_cost)? == Decision::Revert {
                *x = checkpoint;
                self.stats.reverts[level - 1] += 1;
            }
            if flow.is_break() {
                return Ok(ControlFlow::Break(()));
            }
        }
        Ok(ControlFlow::Continue(()))
    }

    fn optimise(&mut self, x: &mut Configuration<P::State>) -> Result<ControlFlow<()>> {
        let outcome = self.problem.local_optimise(&mut x.state, &mut self.local_rng)?;
        if outcome.cost.is_nan() {
            return Err(Error::Numeric("local optimiser returned a NaN cost".into()));
        }
        x.cached_cost = Some(outcome.cost);
        // Every level-0 call counts as at least one evaluation so that an
        // evaluation budget always terminates.
        self.evals += outcome.evaluations.max(1);
        self.stats.level0_calls += 1;
        if !outcome.converged {
            self.stats.unconverged += 1;
        }
        if outcome.cost < self.best.cached_cost.unwrap_or(f64::INFINITY) {
            self.best = x.clone();
        }
        self.push_record()?;

        let exhausted =
            self.budget.exhausted(self.stats.level0_calls, self.evals, self.start.elapsed().as_secs_f64());
        Ok(if exhausted { ControlFlow::Break(()) } else { ControlFlow::Continue(()) })
    }

    fn push_record(&mut self) -> Result<()> {
        let record = TraceRecord {
            cost_evaluations: self.evals,
            level0_calls: self.stats.level0_calls,
            wall_seconds: self.start.elapsed().as_secs_f64(),
            best_cost: self.best.cached_cost.unwrap_or(f64::INFINITY),
        };
        record_trace(&mut self.records, record)
    }
}
