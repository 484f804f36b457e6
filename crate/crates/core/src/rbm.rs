//! Restricted Boltzmann machines trained by contrastive divergence.
//!
//! Units are binary in `{0, 1}` with energy `E(v, h) = -a.v - b.h - v'Wh`.
//! The training objective is the mean log marginal likelihood of the data
//! minus an L2 penalty on `W`; it is evaluated exactly by enumerating the
//! visible layer, which limits the backend to small visible layers.
//!
//! Each scalar (every weight and bias) is its own variable group. The
//! [`BernoulliMask`] picker resets each scalar independently with a fixed
//! probability.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::engine::{perturb_value, LocalOutcome, PerturbationSpec, Problem, SubsetPicker};
use crate::error::{Error, Result};

/// Largest visible layer for which the objective is computed exactly.
pub const MAX_EXACT_VISIBLE: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct RbmParams {
    n_visible: usize,
    n_hidden: usize,
    /// `n_visible x n_hidden`, row-major.
    pub w: Vec<f64>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl RbmParams {
    pub fn zeros(n_visible: usize, n_hidden: usize) -> Self {
        Self {
            n_visible,
            n_hidden,
            w: vec![0.0; n_visible * n_hidden],
            a: vec![0.0; n_visible],
            b: vec![0.0; n_hidden],
        }
    }

    pub fn from_parts(
        n_visible: usize,
        n_hidden: usize,
        w: Vec<f64>,
        a: Vec<f64>,
        b: Vec<f64>,
    ) -> Result<Self> {
        if w.len() != n_visible * n_hidden || a.len() != n_visible || b.len() != n_hidden {
            return Err(Error::Config("RBM parameter shapes do not match".into()));
        }
        let p = Self { n_visible, n_hidden, w, a, b };
        if !p.is_finite() {
            return Err(Error::Numeric("RBM parameters must be finite".into()));
        }
        Ok(p)
    }

    /// Every scalar drawn from `N(0, sigma)`.
    pub fn gaussian<R: Rng + ?Sized>(n_visible: usize, n_hidden: usize, sigma: f64, rng: &mut R) -> Self {
        let mut p = Self::zeros(n_visible, n_hidden);
        for x in p.scalars_mut() {
            *x = sigma * rng.sample::<f64, _>(StandardNormal);
        }
        p
    }

    pub fn n_visible(&self) -> usize {
        self.n_visible
    }

    pub fn n_hidden(&self) -> usize {
        self.n_hidden
    }

    /// Total number of scalars: weights, then visible biases, then hidden biases.
    pub fn len(&self) -> usize {
        self.w.len() + self.a.len() + self.b.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn scalars(&self) -> impl Iterator<Item = &f64> {
        self.w.iter().chain(&self.a).chain(&self.b)
    }

    pub fn scalars_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.w.iter_mut().chain(self.a.iter_mut()).chain(self.b.iter_mut())
    }

    /// Scalar by flat index in the order of [`RbmParams::scalars`].
    pub fn scalar_mut(&mut self, idx: usize) -> &mut f64 {
        let nw = self.w.len();
        let na = self.a.len();
        if idx < nw {
            &mut self.w[idx]
        } else if idx < nw + na {
            &mut self.a[idx - nw]
        } else {
            &mut self.b[idx - nw - na]
        }
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.scalars().copied().collect()
    }

    /// Inverse of [`RbmParams::to_vec`] for the same shape.
    pub fn with_values(&self, values: &[f64]) -> Self {
        let mut p = self.clone();
        for (dst, &v) in p.scalars_mut().zip(values) {
            *dst = v;
        }
        p
    }

    pub fn is_finite(&self) -> bool {
        self.scalars().all(|x| x.is_finite())
    }

    fn axpy(&mut self, scale: f64, other: &Self) {
        for (x, g) in self.scalars_mut().zip(other.scalars()) {
            *x += scale * g;
        }
    }

    fn fill(&mut self, v: f64) {
        self.scalars_mut().for_each(|x| *x = v);
    }
}

/// Binary training vectors of a fixed length.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryDataset {
    n_visible: usize,
    bits: Vec<u8>,
}

impl BinaryDataset {
    pub fn new(n_visible: usize, bits: Vec<u8>) -> Result<Self> {
        if n_visible == 0 || bits.is_empty() || bits.len() % n_visible != 0 {
            return Err(Error::Config(format!(
                "{} bits do not form whole samples of length {n_visible}",
                bits.len()
            )));
        }
        if bits.iter().any(|&b| b > 1) {
            return Err(Error::Domain("dataset entries must be 0 or 1".into()));
        }
        Ok(Self { n_visible, bits })
    }

    pub fn from_samples(samples: &[Vec<u8>]) -> Result<Self> {
        let n_visible = samples.first().map_or(0, Vec::len);
        if samples.iter().any(|s| s.len() != n_visible) {
            return Err(Error::Config("samples have differing lengths".into()));
        }
        Self::new(n_visible, samples.concat())
    }

    pub fn n_visible(&self) -> usize {
        self.n_visible
    }

    pub fn len(&self) -> usize {
        self.bits.len() / self.n_visible
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn samples(&self) -> impl Iterator<Item = &[u8]> {
        self.bits.chunks_exact(self.n_visible)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CdConfig {
    pub gibbs_k: usize,
    pub learning_rate: f64,
    pub epochs: u64,
    pub lambda: f64,
}

impl CdConfig {
    pub fn new(gibbs_k: usize, learning_rate: f64, epochs: u64, lambda: f64) -> Result<Self> {
        if gibbs_k == 0 {
            return Err(Error::Config("CD needs at least one Gibbs step".into()));
        }
        if !(learning_rate >= 0.0) || !learning_rate.is_finite() {
            return Err(Error::Config(format!("learning rate {learning_rate} is invalid")));
        }
        if epochs == 0 {
            return Err(Error::Config("at least one epoch is required".into()));
        }
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(Error::Config(format!("lambda {lambda} is invalid")));
        }
        Ok(Self { gibbs_k, learning_rate, epochs, lambda })
    }
}

impl Default for CdConfig {
    fn default() -> Self {
        Self { gibbs_k: 1, learning_rate: 0.01, epochs: 1000, lambda: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResetPolicy {
    pub reset_prob: f64,
    pub init_sigma: f64,
}

impl ResetPolicy {
    pub fn new(reset_prob: f64, init_sigma: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&reset_prob) {
            return Err(Error::Domain(format!("reset probability {reset_prob} outside [0, 1]")));
        }
        if !(init_sigma > 0.0) || !init_sigma.is_finite() {
            return Err(Error::Domain(format!("init sigma {init_sigma} must be positive")));
        }
        Ok(Self { reset_prob, init_sigma })
    }
}

impl Default for ResetPolicy {
    fn default() -> Self {
        Self { reset_prob: 0.1, init_sigma: 0.1 }
    }
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

#[inline]
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

fn guard(params: &RbmParams, data: &BinaryDataset) -> Result<()> {
    if params.n_visible > MAX_EXACT_VISIBLE {
        return Err(Error::Domain(format!(
            "exact objective needs at most {MAX_EXACT_VISIBLE} visible units, got {}; \
             train with CD only at this size",
            params.n_visible
        )));
    }
    if data.n_visible != params.n_visible {
        return Err(Error::Config(format!(
            "data has {} visible units, model has {}",
            data.n_visible, params.n_visible
        )));
    }
    Ok(())
}

/// Hidden pre-activations `b + v'W` for binary `v`.
fn hidden_input(params: &RbmParams, v: impl Iterator<Item = bool>, out: &mut [f64]) {
    out.copy_from_slice(&params.b);
    let nh = params.n_hidden;
    for (i, on) in v.enumerate() {
        if on {
            for (o, w) in out.iter_mut().zip(&params.w[i * nh..(i + 1) * nh]) {
                *o += w;
            }
        }
    }
}

/// `ln sum_h exp(-E(v, h))` with the hidden layer summed out.
fn log_unnormalised(params: &RbmParams, v: impl Iterator<Item = bool> + Clone, scratch: &mut [f64]) -> f64 {
    hidden_input(params, v.clone(), scratch);
    let visible: f64 = v.zip(&params.a).filter(|(on, _)| *on).map(|(_, a)| a).sum();
    visible + scratch.iter().map(|&x| softplus(x)).sum::<f64>()
}

fn bits_of(code: usize, n: usize) -> impl Iterator<Item = bool> + Clone {
    (0..n).map(move |i| (code >> i) & 1 == 1)
}

/// Log-domain free energies of every visible configuration and `ln Z`.
fn visible_table(params: &RbmParams) -> (Vec<f64>, f64) {
    let nv = params.n_visible;
    let mut scratch = vec![0.0; params.n_hidden];
    let table: Vec<f64> =
        (0..1usize << nv).map(|c| log_unnormalised(params, bits_of(c, nv), &mut scratch)).collect();
    let max = table.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let log_z = max + table.iter().map(|f| (f - max).exp()).sum::<f64>().ln();
    (table, log_z)
}

fn penalty(params: &RbmParams, lambda: f64) -> f64 {
    0.5 * lambda * params.w.iter().map(|w| w * w).sum::<f64>()
}

fn objective_unchecked(params: &RbmParams, data: &BinaryDataset, lambda: f64) -> f64 {
    let (_, log_z) = visible_table(params);
    let mut scratch = vec![0.0; params.n_hidden];
    let mean_free = data
        .samples()
        .map(|s| log_unnormalised(params, s.iter().map(|&x| x == 1), &mut scratch))
        .sum::<f64>()
        / data.len() as f64;
    mean_free - log_z - penalty(params, lambda)
}

/// Mean log-likelihood of the data minus `(lambda / 2) * sum W^2`, computed
/// exactly.
pub fn exact_objective(params: &RbmParams, data: &BinaryDataset, lambda: f64) -> Result<f64> {
    guard(params, data)?;
    Ok(objective_unchecked(params, data, lambda))
}

/// Gradient of [`exact_objective`]: data correlations minus model
/// correlations, minus `lambda * W` for the weights.
pub fn exact_gradient(params: &RbmParams, data: &BinaryDataset, lambda: f64) -> Result<RbmParams> {
    guard(params, data)?;
    let (nv, nh) = (params.n_visible, params.n_hidden);
    let mut grad = RbmParams::zeros(nv, nh);
    let mut h = vec![0.0; nh];

    let mut accumulate = |v: &mut dyn Iterator<Item = bool>, weight: f64, grad: &mut RbmParams| {
        let v: Vec<bool> = v.collect();
        hidden_input(params, v.iter().copied(), &mut h);
        h.iter_mut().for_each(|x| *x = sigmoid(*x));
        for (i, &on) in v.iter().enumerate() {
            if on {
                grad.a[i] += weight;
                for (g, hj) in grad.w[i * nh..(i + 1) * nh].iter_mut().zip(&h) {
                    *g += weight * hj;
                }
            }
        }
        for (g, hj) in grad.b.iter_mut().zip(&h) {
            *g += weight * hj;
        }
    };

    let inv_n = 1.0 / data.len() as f64;
    for s in data.samples() {
        accumulate(&mut s.iter().map(|&x| x == 1), inv_n, &mut grad);
    }
    let (table, log_z) = visible_table(params);
    for (code, f) in table.iter().enumerate() {
        let p = (f - log_z).exp();
        accumulate(&mut bits_of(code, nv), -p, &mut grad);
    }
    for (g, w) in grad.w.iter_mut().zip(&params.w) {
        *g -= lambda * w;
    }
    Ok(grad)
}

/// Buffers for repeated CD estimates over one batch. Repeated samples share
/// a single positive-phase computation.
#[derive(Debug, Clone)]
struct CdWorkspace {
    distinct: Vec<f64>,
    weights: Vec<f64>,
    sample_slot: Vec<usize>,
    ph0: Vec<f64>,
    h: Vec<f64>,
    v: Vec<f64>,
    pv: Vec<f64>,
    ph: Vec<f64>,
    grad: RbmParams,
}

impl CdWorkspace {
    fn new(batch: &BinaryDataset, n_hidden: usize) -> Self {
        let nv = batch.n_visible;
        let mut slots: std::collections::HashMap<&[u8], usize> = std::collections::HashMap::new();
        let mut distinct = Vec::new();
        let mut weights: Vec<f64> = Vec::new();
        let sample_slot = batch
            .samples()
            .map(|s| {
                let next = weights.len();
                let slot = *slots.entry(s).or_insert(next);
                if slot == next {
                    distinct.extend(s.iter().map(|&b| b as f64));
                    weights.push(0.0);
                }
                weights[slot] += 1.0;
                slot
            })
            .collect();
        let n_distinct = weights.len();
        Self {
            distinct,
            weights,
            sample_slot,
            ph0: vec![0.0; n_distinct * n_hidden],
            h: vec![0.0; n_hidden],
            v: vec![0.0; nv],
            pv: vec![0.0; nv],
            ph: vec![0.0; n_hidden],
            grad: RbmParams::zeros(nv, n_hidden),
        }
    }
}

#[inline]
fn hidden_probs(params: &RbmParams, v: &[f64], out: &mut [f64]) {
    let nh = params.n_hidden;
    out.copy_from_slice(&params.b);
    for (i, &vi) in v.iter().enumerate() {
        if vi != 0.0 {
            for (o, w) in out.iter_mut().zip(&params.w[i * nh..(i + 1) * nh]) {
                *o += w;
            }
        }
    }
    out.iter_mut().for_each(|x| *x = sigmoid(*x));
}

#[inline]
fn visible_probs(params: &RbmParams, h: &[f64], out: &mut [f64]) {
    let nh = params.n_hidden;
    for (i, o) in out.iter_mut().enumerate() {
        let row = &params.w[i * nh..(i + 1) * nh];
        let act: f64 = row.iter().zip(h).map(|(w, hj)| w * hj).sum();
        *o = sigmoid(params.a[i] + act);
    }
}

#[inline]
fn sample_bernoulli<R: Rng + ?Sized>(probs: &[f64], out: &mut [f64], rng: &mut R) {
    for (o, &p) in out.iter_mut().zip(probs) {
        *o = if rng.random::<f64>() < p { 1.0 } else { 0.0 };
    }
}

fn accumulate_outer(grad: &mut RbmParams, v: &[f64], h: &[f64], weight: f64) {
    let nh = grad.n_hidden;
    for (i, &vi) in v.iter().enumerate() {
        if vi != 0.0 {
            grad.a[i] += weight;
            for (g, hj) in grad.w[i * nh..(i + 1) * nh].iter_mut().zip(h) {
                *g += weight * hj;
            }
        }
    }
    for (g, hj) in grad.b.iter_mut().zip(h) {
        *g += weight * hj;
    }
}

/// CD-k estimate into `ws.grad`. The positive phase uses hidden
/// probabilities with the visible layer clamped to each sample; the
/// negative phase runs `k` alternating Gibbs steps from the sample.
fn cd_into<R: Rng + ?Sized>(
    params: &RbmParams,
    batch_len: usize,
    gibbs_k: usize,
    lambda: f64,
    ws: &mut CdWorkspace,
    rng: &mut R,
) {
    let (nv, nh) = (params.n_visible, params.n_hidden);
    ws.grad.fill(0.0);
    for (slot, &weight) in ws.weights.iter().enumerate() {
        let v0 = &ws.distinct[slot * nv..(slot + 1) * nv];
        let ph0 = &mut ws.ph0[slot * nh..(slot + 1) * nh];
        hidden_probs(params, v0, ph0);
        accumulate_outer(&mut ws.grad, v0, ph0, weight);
    }
    for &slot in &ws.sample_slot {
        sample_bernoulli(&ws.ph0[slot * nh..(slot + 1) * nh], &mut ws.h, rng);
        for step in 0..gibbs_k {
            visible_probs(params, &ws.h, &mut ws.pv);
            sample_bernoulli(&ws.pv, &mut ws.v, rng);
            hidden_probs(params, &ws.v, &mut ws.ph);
            if step + 1 < gibbs_k {
                sample_bernoulli(&ws.ph, &mut ws.h, rng);
            }
        }
        accumulate_outer(&mut ws.grad, &ws.v, &ws.ph, -1.0);
    }
    let inv = 1.0 / batch_len as f64;
    ws.grad.scalars_mut().for_each(|g| *g *= inv);
    for (g, w) in ws.grad.w.iter_mut().zip(&params.w) {
        *g -= lambda * w;
    }
}

/// One stochastic CD-k gradient estimate over `batch`.
pub fn cd_gradient<R: Rng + ?Sized>(
    params: &RbmParams,
    batch: &BinaryDataset,
    gibbs_k: usize,
    lambda: f64,
    rng: &mut R,
) -> Result<RbmParams> {
    if batch.n_visible != params.n_visible {
        return Err(Error::Config("batch and model visible sizes differ".into()));
    }
    if gibbs_k == 0 {
        return Err(Error::Config("CD needs at least one Gibbs step".into()));
    }
    let mut ws = CdWorkspace::new(batch, params.n_hidden);
    cd_into(params, batch.len(), gibbs_k, lambda, &mut ws, rng);
    Ok(ws.grad)
}

/// Full-batch CD gradient ascent for `config.epochs` epochs.
pub fn local_optimise<R: Rng + ?Sized>(
    params: &mut RbmParams,
    data: &BinaryDataset,
    config: &CdConfig,
    rng: &mut R,
) -> Result<()> {
    if data.n_visible != params.n_visible {
        return Err(Error::Config("data and model visible sizes differ".into()));
    }
    train_unchecked(params, data, config, rng)
}

fn train_unchecked<R: Rng + ?Sized>(
    params: &mut RbmParams,
    data: &BinaryDataset,
    config: &CdConfig,
    rng: &mut R,
) -> Result<()> {
    if config.learning_rate == 0.0 {
        return Ok(());
    }
    let mut ws = CdWorkspace::new(data, params.n_hidden);
    for _ in 0..config.epochs {
        cd_into(params, data.len(), config.gibbs_k, config.lambda, &mut ws, rng);
        params.axpy(config.learning_rate, &ws.grad);
    }
    if !params.is_finite() {
        return Err(Error::Numeric("RBM parameters diverged during CD training".into()));
    }
    Ok(())
}

/// Resamples each scalar from `N(0, init_sigma)` independently with
/// probability `reset_prob`.
pub fn bernoulli_reset<R: Rng + ?Sized>(params: &mut RbmParams, policy: &ResetPolicy, rng: &mut R) {
    let picks = BernoulliMask::new(policy.reset_prob).pick(params.len(), 0, rng);
    resample(params, &picks, policy.init_sigma, None, rng);
}

fn resample<R: Rng + ?Sized>(
    params: &mut RbmParams,
    indices: &[usize],
    sigma: f64,
    perturbation: Option<&PerturbationSpec>,
    rng: &mut R,
) {
    for &i in indices {
        let x = params.scalar_mut(i);
        *x = match perturbation {
            None => sigma * rng.sample::<f64, _>(StandardNormal),
            Some(spec) => perturb_value(*x, spec, rng),
        };
    }
}

/// Picks every group independently with a fixed probability. A level
/// whose nominal size covers all groups still resets everything.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BernoulliMask {
    prob: f64,
}

impl BernoulliMask {
    pub fn new(prob: f64) -> Self {
        Self { prob: prob.clamp(0.0, 1.0) }
    }
}

impl SubsetPicker for BernoulliMask {
    fn pick<R: Rng + ?Sized>(&self, n_groups: usize, k: usize, rng: &mut R) -> Vec<usize> {
        if k >= n_groups {
            return (0..n_groups).collect();
        }
        (0..n_groups).filter(|_| rng.random::<f64>() < self.prob).collect()
    }
}

/// The two base patterns: the first half of the bits set, and alternating
/// bits starting with 1 (bit `j` is `j mod 2` for 1-based `j`).
pub fn base_patterns(n_visible: usize) -> [Vec<u8>; 2] {
    let half = (0..n_visible).map(|j| u8::from(j < n_visible / 2)).collect();
    let alternating = (1..=n_visible).map(|j| (j % 2) as u8).collect();
    [half, alternating]
}

/// The base patterns followed by their bitwise negations.
pub fn training_patterns(n_visible: usize) -> [Vec<u8>; 4] {
    let [x1, x2] = base_patterns(n_visible);
    let neg = |x: &Vec<u8>| x.iter().map(|b| 1 - b).collect::<Vec<u8>>();
    let (n1, n2) = (neg(&x1), neg(&x2));
    [x1, x2, n1, n2]
}

/// Samples uniformly from the four training patterns, then flips each bit
/// independently with probability `noise_prob`.
pub fn gen_training_data<R: Rng + ?Sized>(
    n_visible: usize,
    n_samples: usize,
    noise_prob: f64,
    rng: &mut R,
) -> Result<BinaryDataset> {
    if n_visible < 2 {
        return Err(Error::Domain("training patterns need at least 2 visible units".into()));
    }
    if n_samples == 0 {
        return Err(Error::Domain("need at least one sample".into()));
    }
    if !(0.0..=1.0).contains(&noise_prob) {
        return Err(Error::Domain(format!("noise probability {noise_prob} outside [0, 1]")));
    }
    let patterns = training_patterns(n_visible);
    let mut bits = Vec::with_capacity(n_visible * n_samples);
    for _ in 0..n_samples {
        let p = &patterns[rng.random_range(0..4)];
        bits.extend(p.iter().map(|&b| if rng.random::<f64>() < noise_prob { 1 - b } else { b }));
    }
    BinaryDataset::new(n_visible, bits)
}

/// CD training of an RBM on a borrowed dataset; cost is minus the exact
/// objective.
#[derive(Debug, Clone)]
pub struct RbmTraining<'a> {
    data: &'a BinaryDataset,
    n_hidden: usize,
    cd: CdConfig,
    policy: ResetPolicy,
}

impl<'a> RbmTraining<'a> {
    pub fn new(data: &'a BinaryDataset, n_hidden: usize, cd: CdConfig, policy: ResetPolicy) -> Result<Self> {
        if data.n_visible > MAX_EXACT_VISIBLE {
            return Err(Error::Domain(format!(
                "{} visible units exceed the exact-objective limit of {MAX_EXACT_VISIBLE}",
                data.n_visible
            )));
        }
        if n_hidden == 0 {
            return Err(Error::Config("need at least one hidden unit".into()));
        }
        Ok(Self { data, n_hidden, cd, policy })
    }

    pub fn policy(&self) -> &ResetPolicy {
        &self.policy
    }

    /// Picker implementing this problem's reset policy.
    pub fn mask(&self) -> BernoulliMask {
        BernoulliMask::new(self.policy.reset_prob)
    }

    /// Nominal subset size for a partial level: the expected number of
    /// scalars the mask resets, at least 1 and below the total.
    pub fn nominal_subset_size(&self) -> usize {
        let n = self.group_count();
        ((self.policy.reset_prob * n as f64).round() as usize).clamp(1, n.saturating_sub(1).max(1))
    }
}

impl Problem for RbmTraining<'_> {
    type State = RbmParams;

    fn group_count(&self) -> usize {
        self.data.n_visible * self.n_hidden + self.data.n_visible + self.n_hidden
    }

    fn cost(&self, params: &RbmParams) -> f64 {
        -objective_unchecked(params, self.data, self.cd.lambda)
    }

    fn full_init<R: Rng + ?Sized>(&self, rng: &mut R) -> RbmParams {
        RbmParams::gaussian(self.data.n_visible, self.n_hidden, self.policy.init_sigma, rng)
    }

    fn local_optimise<R: Rng + ?Sized>(&self, params: &mut RbmParams, rng: &mut R) -> Result<LocalOutcome> {
        train_unchecked(params, self.data, &self.cd, rng)?;
        Ok(LocalOutcome { cost: self.cost(params), evaluations: self.cd.epochs + 1, converged: true })
    }

    fn reinit_groups<R: Rng + ?Sized>(
        &self,
        params: &mut RbmParams,
        groups: &[usize],
        perturbation: Option<&PerturbationSpec>,
        rng: &mut R,
    ) {
        resample(params, groups, self.policy.init_sigma, perturbation, rng);
    }
}
