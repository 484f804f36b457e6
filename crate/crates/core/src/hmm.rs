//! Discrete hidden Markov models trained by Baum-Welch.
//!
//! Forward and backward passes are scaled per time step so long sequences
//! do not underflow; the log-likelihood is the sum of the log scale factors.
//! One variable group per hidden state: its row of the transition matrix
//! and its row of the emission matrix.

use rand::Rng;

use crate::engine::{perturb_value, LocalOutcome, PerturbationSpec, Problem};
use crate::error::{Error, Result};

/// Stop when one EM step improves the log-likelihood by less than this.
pub const CONVERGENCE_TOLERANCE: f64 = 1e-8;
/// EM iterations per local optimisation.
pub const MAX_EM_ITERATIONS: u64 = 1_000;

#[derive(Debug, Clone, PartialEq)]
pub struct HmmModel {
    n_states: usize,
    n_symbols: usize,
    /// Initial distribution, length `n_states`.
    pub pi: Vec<f64>,
    /// Transitions, `n_states x n_states` row-major.
    pub a: Vec<f64>,
    /// Emissions, `n_states x n_symbols` row-major.
    pub b: Vec<f64>,
}

/// Tolerance on row sums accepted by [`HmmModel::new`].
const STOCHASTIC_TOLERANCE: f64 = 1e-12;

fn check_stochastic(name: &str, rows: &[f64], width: usize) -> Result<()> {
    for (r, row) in rows.chunks_exact(width).enumerate() {
        if row.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
            return Err(Error::Domain(format!("{name} row {r} has a negative or non-finite entry")));
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > STOCHASTIC_TOLERANCE {
            return Err(Error::Domain(format!("{name} row {r} sums to {sum}")));
        }
    }
    Ok(())
}

impl HmmModel {
    pub fn new(n_states: usize, n_symbols: usize, pi: Vec<f64>, a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        if n_states == 0 || n_symbols == 0 {
            return Err(Error::Config("an HMM needs at least one state and one symbol".into()));
        }
        if pi.len() != n_states || a.len() != n_states * n_states || b.len() != n_states * n_symbols {
            return Err(Error::Config("HMM parameter shapes do not match".into()));
        }
        check_stochastic("pi", &pi, n_states)?;
        check_stochastic("A", &a, n_states)?;
        check_stochastic("B", &b, n_symbols)?;
        Ok(Self { n_states, n_symbols, pi, a, b })
    }

    /// Every row uniform.
    pub fn uniform(n_states: usize, n_symbols: usize) -> Self {
        let ns = n_states as f64;
        let nm = n_symbols as f64;
        Self {
            n_states,
            n_symbols,
            pi: vec![1.0 / ns; n_states],
            a: vec![1.0 / ns; n_states * n_states],
            b: vec![1.0 / nm; n_states * n_symbols],
        }
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_symbols(&self) -> usize {
        self.n_symbols
    }

    #[inline]
    pub fn trans(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.n_states + j]
    }

    #[inline]
    pub fn emit(&self, i: usize, s: usize) -> f64 {
        self.b[i * self.n_symbols + s]
    }
}

/// An observed symbol sequence over an alphabet of `n_symbols`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObsSeq {
    symbols: Vec<usize>,
    n_symbols: usize,
}

impl ObsSeq {
    pub fn new(symbols: Vec<usize>, n_symbols: usize) -> Result<Self> {
        if symbols.is_empty() {
            return Err(Error::Config("observation sequence is empty".into()));
        }
        if let Some(&s) = symbols.iter().find(|&&s| s >= n_symbols) {
            return Err(Error::Domain(format!("symbol {s} outside alphabet of {n_symbols}")));
        }
        Ok(Self { symbols, n_symbols })
    }

    /// A binary sequence from a string of '0'/'1' characters.
    pub fn from_bits(bits: &str) -> Result<Self> {
        let symbols = bits
            .chars()
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                other => Err(Error::Domain(format!("'{other}' is not a bit"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(symbols, 2)
    }

    pub fn symbols(&self) -> &[usize] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn n_symbols(&self) -> usize {
        self.n_symbols
    }
}

fn random_row<R: Rng + ?Sized>(row: &mut [f64], rng: &mut R) {
    for p in row.iter_mut() {
        *p = rng.random::<f64>();
    }
    normalise(row);
}

/// Scales a non-negative row to sum 1; an all-zero row becomes uniform.
fn normalise(row: &mut [f64]) {
    let sum: f64 = row.iter().sum();
    if sum > 0.0 && sum.is_finite() {
        row.iter_mut().for_each(|p| *p /= sum);
    } else {
        let u = 1.0 / row.len() as f64;
        row.iter_mut().for_each(|p| *p = u);
    }
}

/// Every row of `pi`, `A` and `B` drawn as i.i.d. uniform(0, 1) entries,
/// then normalised.
pub fn random_model<R: Rng + ?Sized>(n_states: usize, n_symbols: usize, rng: &mut R) -> HmmModel {
    let mut m = HmmModel {
        n_states,
        n_symbols,
        pi: vec![0.0; n_states],
        a: vec![0.0; n_states * n_states],
        b: vec![0.0; n_states * n_symbols],
    };
    random_row(&mut m.pi, rng);
    for s in 0..n_states {
        resample_state(&mut m, s, None, rng);
    }
    m
}

fn resample_state<R: Rng + ?Sized>(
    m: &mut HmmModel,
    s: usize,
    perturbation: Option<&PerturbationSpec>,
    rng: &mut R,
) {
    let (n, k) = (m.n_states, m.n_symbols);
    let rows = [&mut m.a[s * n..(s + 1) * n], &mut m.b[s * k..(s + 1) * k]];
    for row in rows {
        match perturbation {
            None => random_row(row, rng),
            Some(spec) => {
                for p in row.iter_mut() {
                    *p = perturb_value(*p, spec, rng).abs();
                }
                normalise(row);
            }
        }
    }
}

/// Resamples the transition and emission rows of the named states. `pi`
/// and all other rows are untouched.
pub fn reinit_groups<R: Rng + ?Sized>(
    model: &mut HmmModel,
    states: &[usize],
    perturbation: Option<&PerturbationSpec>,
    rng: &mut R,
) {
    for &s in states {
        resample_state(model, s, perturbation, rng);
    }
}

fn check_pair(model: &HmmModel, seq: &ObsSeq) -> Result<()> {
    if seq.n_symbols > model.n_symbols {
        return Err(Error::Config(format!(
            "sequence alphabet {} exceeds model alphabet {}",
            seq.n_symbols, model.n_symbols
        )));
    }
    Ok(())
}

/// Scaled forward pass. Fills `alpha` (`T x N`, each row summing to 1) and
/// `scale` (the per-step normalisers). Returns `None` if the sequence has
/// probability zero.
fn forward(model: &HmmModel, obs: &[usize], alpha: &mut [f64], scale: &mut [f64]) -> Option<()> {
    let n = model.n_states;
    for (t, &o) in obs.iter().enumerate() {
        let (prev, cur) = alpha.split_at_mut(t * n);
        let cur = &mut cur[..n];
        if t == 0 {
            for (i, c) in cur.iter_mut().enumerate() {
                *c = model.pi[i] * model.emit(i, o);
            }
        } else {
            let prev = &prev[(t - 1) * n..];
            cur.iter_mut().for_each(|c| *c = 0.0);
            for (i, &p) in prev.iter().enumerate() {
                if p == 0.0 {
                    continue;
                }
                for (c, &a) in cur.iter_mut().zip(&model.a[i * n..(i + 1) * n]) {
                    *c += p * a;
                }
            }
            for (j, c) in cur.iter_mut().enumerate() {
                *c *= model.emit(j, o);
            }
        }
        let sum: f64 = cur.iter().sum();
        if !(sum > 0.0) {
            return None;
        }
        scale[t] = sum;
        cur.iter_mut().for_each(|c| *c /= sum);
    }
    Some(())
}

/// `ln P(seq | model)` by the scaled forward pass; `-inf` when the
/// sequence is impossible under the model.
pub fn log_likelihood(model: &HmmModel, seq: &ObsSeq) -> Result<f64> {
    check_pair(model, seq)?;
    let t = seq.len();
    let mut alpha = vec![0.0; t * model.n_states];
    let mut scale = vec![0.0; t];
    Ok(match forward(model, &seq.symbols, &mut alpha, &mut scale) {
        Some(()) => scale.iter().map(|c| c.ln()).sum(),
        None => f64::NEG_INFINITY,
    })
}

/// Reusable buffers for forward-backward.
#[derive(Debug, Default)]
struct Workspace {
    alpha: Vec<f64>,
    beta: Vec<f64>,
    scale: Vec<f64>,
    xi_sum: Vec<f64>,
    emit_num: Vec<f64>,
    gamma_sum: Vec<f64>,
}

impl Workspace {
    fn resize(&mut self, n: usize, k: usize, t: usize) {
        self.alpha.resize(t * n, 0.0);
        self.beta.resize(t * n, 0.0);
        self.scale.resize(t, 0.0);
        self.xi_sum.resize(n * n, 0.0);
        self.emit_num.resize(n * k, 0.0);
        self.gamma_sum.resize(n, 0.0);
    }
}

/// One EM update. Returns the updated model and the log-likelihood of the
/// *input* model (a by-product of its forward pass).
fn em_step(model: &HmmModel, obs: &[usize], ws: &mut Workspace) -> Result<(HmmModel, f64)> {
    let (n, k, t_len) = (model.n_states, model.n_symbols, obs.len());
    ws.resize(n, k, t_len);
    if forward(model, obs, &mut ws.alpha, &mut ws.scale).is_none() {
        return Err(Error::Numeric(
            "forward pass underflowed: the sequence has zero probability under the model".into(),
        ));
    }
    let ll: f64 = ws.scale.iter().map(|c| c.ln()).sum();

    // Scaled backward pass with the forward normalisers.
    ws.beta[(t_len - 1) * n..].iter_mut().for_each(|b| *b = 1.0);
    for t in (0..t_len - 1).rev() {
        let o = obs[t + 1];
        let (cur, next) = ws.beta.split_at_mut((t + 1) * n);
        let cur = &mut cur[t * n..];
        let next = &next[..n];
        for (i, c) in cur.iter_mut().enumerate() {
            let row = &model.a[i * n..(i + 1) * n];
            let mut acc = 0.0;
            for (j, (&a, &b)) in row.iter().zip(next).enumerate() {
                acc += a * model.emit(j, o) * b;
            }
            *c = acc / ws.scale[t + 1];
        }
    }

    ws.xi_sum.iter_mut().for_each(|v| *v = 0.0);
    ws.emit_num.iter_mut().for_each(|v| *v = 0.0);
    ws.gamma_sum.iter_mut().for_each(|v| *v = 0.0);
    let mut new_pi = vec![0.0; n];
    for (t, &o) in obs.iter().enumerate() {
        let alpha = &ws.alpha[t * n..(t + 1) * n];
        let beta = &ws.beta[t * n..(t + 1) * n];
        let norm: f64 = alpha.iter().zip(beta).map(|(a, b)| a * b).sum();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::Numeric(format!("posterior normaliser {norm} at step {t}")));
        }
        for i in 0..n {
            let g = alpha[i] * beta[i] / norm;
            ws.emit_num[i * k + o] += g;
            ws.gamma_sum[i] += g;
            if t == 0 {
                new_pi[i] = g;
            }
        }
        if t + 1 < t_len {
            let o_next = obs[t + 1];
            let beta_next = &ws.beta[(t + 1) * n..(t + 2) * n];
            let c = ws.scale[t + 1];
            for i in 0..n {
                if alpha[i] == 0.0 {
                    continue;
                }
                let ai = alpha[i] / c;
                let row = &model.a[i * n..(i + 1) * n];
                let acc = &mut ws.xi_sum[i * n..(i + 1) * n];
                for j in 0..n {
                    acc[j] += ai * row[j] * model.emit(j, o_next) * beta_next[j];
                }
            }
        }
    }

    let mut next = model.clone();
    normalise(&mut new_pi);
    next.pi = new_pi;
    for i in 0..n {
        let row = &ws.xi_sum[i * n..(i + 1) * n];
        let total: f64 = row.iter().sum();
        // A state with no posterior mass keeps its old rows.
        if total > 0.0 {
            for (dst, &v) in next.a[i * n..(i + 1) * n].iter_mut().zip(row) {
                *dst = v / total;
            }
        }
        let erow = &ws.emit_num[i * k..(i + 1) * k];
        let etotal: f64 = erow.iter().sum();
        if etotal > 0.0 {
            for (dst, &v) in next.b[i * k..(i + 1) * k].iter_mut().zip(erow) {
                *dst = v / etotal;
            }
        }
    }
    Ok((next, ll))
}

/// One Baum-Welch re-estimation of `pi`, `A` and `B`.
pub fn baum_welch_step(model: &HmmModel, seq: &ObsSeq) -> Result<HmmModel> {
    check_pair(model, seq)?;
    Ok(em_step(model, &seq.symbols, &mut Workspace::default())?.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmReport {
    pub log_likelihood: f64,
    /// EM updates applied to the model.
    pub iterations: u64,
    /// Forward passes run (one per EM step plus the final evaluation).
    pub evaluations: u64,
    pub converged: bool,
}

/// Baum-Welch until one step gains less than [`CONVERGENCE_TOLERANCE`] or
/// [`MAX_EM_ITERATIONS`] updates have been made.
pub fn local_optimise(model: &mut HmmModel, seq: &ObsSeq) -> Result<EmReport> {
    check_pair(model, seq)?;
    optimise_unchecked(model, &seq.symbols, MAX_EM_ITERATIONS)
}

fn optimise_unchecked(model: &mut HmmModel, obs: &[usize], cap: u64) -> Result<EmReport> {
    let mut ws = Workspace::default();
    let (mut next, mut ll) = em_step(model, obs, &mut ws)?;
    let mut iterations = 0;
    let mut evaluations = 1;
    loop {
        *model = next;
        iterations += 1;
        let (candidate, ll_new) = em_step(model, obs, &mut ws)?;
        evaluations += 1;
        let gain = ll_new - ll;
        ll = ll_new;
        if gain < CONVERGENCE_TOLERANCE {
            return Ok(EmReport { log_likelihood: ll, iterations, evaluations, converged: true });
        }
        if iterations >= cap {
            return Ok(EmReport { log_likelihood: ll, iterations, evaluations, converged: false });
        }
        next = candidate;
    }
}

/// Baum-Welch training of one observation sequence.
#[derive(Debug, Clone)]
pub struct HmmTraining<'a> {
    seq: &'a ObsSeq,
    n_states: usize,
}

impl<'a> HmmTraining<'a> {
    pub fn new(seq: &'a ObsSeq, n_states: usize) -> Result<Self> {
        if n_states == 0 {
            return Err(Error::Config("need at least one hidden state".into()));
        }
        Ok(Self { seq, n_states })
    }
}

impl Problem for HmmTraining<'_> {
    type State = HmmModel;

    fn group_count(&self) -> usize {
        self.n_states
    }

    /// Negative log-likelihood.
    fn cost(&self, model: &HmmModel) -> f64 {
        let mut alpha = vec![0.0; self.seq.len() * model.n_states];
        let mut scale = vec![0.0; self.seq.len()];
        match forward(model, &self.seq.symbols, &mut alpha, &mut scale) {
            Some(()) => -scale.iter().map(|c| c.ln()).sum::<f64>(),
            None => f64::INFINITY,
        }
    }

    fn full_init<R: Rng + ?Sized>(&self, rng: &mut R) -> HmmModel {
        random_model(self.n_states, self.seq.n_symbols, rng)
    }

    fn local_optimise<R: Rng + ?Sized>(&self, model: &mut HmmModel, _rng: &mut R) -> Result<LocalOutcome> {
        let r = optimise_unchecked(model, &self.seq.symbols, MAX_EM_ITERATIONS)?;
        Ok(LocalOutcome { cost: -r.log_likelihood, evaluations: r.evaluations, converged: r.converged })
    }

    fn reinit_groups<R: Rng + ?Sized>(
        &self,
        model: &mut HmmModel,
        groups: &[usize],
        perturbation: Option<&PerturbationSpec>,
        rng: &mut R,
    ) {
        reinit_groups(model, groups, perturbation, rng);
    }
}
