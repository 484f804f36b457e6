//! k-medoids by alternating PAM on a precomputed dissimilarity matrix.
//!
//! The local optimiser alternates between assigning every point to its
//! closest medoid and, within each cluster, moving the medoid to the member
//! with the smallest summed dissimilarity to the rest of the cluster. One
//! variable group per medoid slot.

use rand::Rng;

use crate::engine::{LocalOutcome, PerturbationSpec, Problem};
use crate::error::{Error, Result};

pub const MAX_PAM_ITERATIONS: u64 = 10_000;

/// Relative asymmetry above which the loader warns before symmetrising.
pub const ASYMMETRY_TOLERANCE: f64 = 1e-9;

/// Square matrix of non-negative dissimilarities with a zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DissimilarityMatrix {
    n: usize,
    d: Vec<f64>,
}

/// Outcome of building a matrix from raw entries.
#[derive(Debug, Clone, PartialEq)]
pub struct Symmetrised {
    pub matrix: DissimilarityMatrix,
    /// Largest `|d_ij - d_ji| / max(|d_ij|, |d_ji|)` seen in the input.
    pub max_relative_asymmetry: f64,
}

impl DissimilarityMatrix {
    /// Validates a row-major `n x n` matrix and averages it with its
    /// transpose.
    pub fn from_raw(n: usize, mut d: Vec<f64>) -> Result<Symmetrised> {
        if n == 0 || d.len() != n * n {
            return Err(Error::Config(format!("expected {n} x {n} entries, got {}", d.len())));
        }
        for i in 0..n {
            for j in 0..n {
                let v = d[i * n + j];
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::Domain(format!(
                        "entry ({i}, {j}) = {v} is not a finite non-negative number"
                    )));
                }
            }
            if d[i * n + i] != 0.0 {
                return Err(Error::Domain(format!(
                    "diagonal entry ({i}, {i}) = {} is not zero",
                    d[i * n + i]
                )));
            }
        }
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i + 1..n {
                let (a, b) = (d[i * n + j], d[j * n + i]);
                let scale = a.abs().max(b.abs());
                if scale > 0.0 {
                    worst = worst.max((a - b).abs() / scale);
                }
                let mean = 0.5 * (a + b);
                d[i * n + j] = mean;
                d[j * n + i] = mean;
            }
        }
        Ok(Symmetrised { matrix: Self { n, d }, max_relative_asymmetry: worst })
    }

    /// Squared Euclidean distances between the given points.
    pub fn squared_euclidean(points: &[Vec<f64>]) -> Result<Self> {
        let n = points.len();
        let mut d = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let v: f64 = points[i].iter().zip(&points[j]).map(|(a, b)| (a - b) * (a - b)).sum();
                d[i * n + j] = v;
                d[j * n + i] = v;
            }
        }
        Ok(Self::from_raw(n, d)?.matrix)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.d[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.d[i * self.n..(i + 1) * self.n]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MedoidState {
    /// Point index of each medoid slot; pairwise distinct.
    pub medoids: Vec<usize>,
    /// Medoid slot of every point.
    pub assignment: Vec<usize>,
}

/// Sum of each point's dissimilarity to its assigned medoid.
pub fn medoid_cost(state: &MedoidState, d: &DissimilarityMatrix) -> f64 {
    state.assignment.iter().enumerate().map(|(p, &slot)| d.get(p, state.medoids[slot])).sum()
}

/// Closest medoid slot for `p`; ties go to the lowest slot. A medoid is
/// always assigned to its own slot.
fn closest_slot(p: usize, medoids: &[usize], d: &DissimilarityMatrix) -> usize {
    if let Some(own) = medoids.iter().position(|&m| m == p) {
        return own;
    }
    let row = d.row(p);
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (slot, &m) in medoids.iter().enumerate() {
        if row[m] < best_d {
            best_d = row[m];
            best = slot;
        }
    }
    best
}

/// Reference assignment: full scan of every medoid for every point.
pub fn assign_all(medoids: &[usize], d: &DissimilarityMatrix) -> Vec<usize> {
    (0..d.n).map(|p| closest_slot(p, medoids, d)).collect()
}

fn check_state(state: &MedoidState, d: &DissimilarityMatrix) -> Result<()> {
    let k = state.medoids.len();
    if k == 0 || k > d.n || state.assignment.len() != d.n {
        return Err(Error::Config("medoid state does not fit the matrix".into()));
    }
    let mut seen = vec![false; d.n];
    for &m in &state.medoids {
        if m >= d.n || std::mem::replace(&mut seen[m], true) {
            return Err(Error::Config(format!("medoid {m} is out of range or repeated")));
        }
    }
    if state.assignment.iter().any(|&s| s >= k) {
        return Err(Error::Config("assignment slot out of range".into()));
    }
    Ok(())
}

/// `k` distinct uniformly random medoids with nearest assignment.
pub fn init_medoids<R: Rng + ?Sized>(d: &DissimilarityMatrix, k: usize, rng: &mut R) -> Result<MedoidState> {
    if k == 0 || k > d.n {
        return Err(Error::Domain(format!("k = {k} needs 1 <= k <= n = {}", d.n)));
    }
    let medoids = rand::seq::index::sample(rng, d.n, k).into_vec();
    let assignment = assign_all(&medoids, d);
    Ok(MedoidState { medoids, assignment })
}

/// Replaces the named slots with uniformly random non-medoid points and
/// updates the assignment incrementally.
pub fn reinit_groups<R: Rng + ?Sized>(
    state: &mut MedoidState,
    d: &DissimilarityMatrix,
    slots: &[usize],
    rng: &mut R,
) {
    let k = state.medoids.len();
    if slots.is_empty() || k == d.n {
        return;
    }
    let mut is_medoid = vec![false; d.n];
    for &m in &state.medoids {
        is_medoid[m] = true;
    }
    for &slot in slots {
        let free = d.n - k;
        // The r-th non-medoid point, uniformly.
        let r = rng.random_range(0..free);
        let new = (0..d.n).filter(|&p| !is_medoid[p]).nth(r).expect("r < free");
        let old = state.medoids[slot];
        is_medoid[old] = false;
        is_medoid[new] = true;
        state.medoids[slot] = new;
        reassign_after_swap(state, d, slot);
    }
}

/// Restores nearest-slot assignment after `slot` changed its medoid. Points
/// that were in `slot` rescan every medoid; the rest only compare their
/// current medoid against the new one.
fn reassign_after_swap(state: &mut MedoidState, d: &DissimilarityMatrix, slot: usize) {
    let new = state.medoids[slot];
    for p in 0..d.n {
        let current = state.assignment[p];
        if current == slot {
            state.assignment[p] = closest_slot(p, &state.medoids, d);
        } else if p == new {
            state.assignment[p] = slot;
        } else if state.medoids[current] != p {
            let dc = d.get(p, state.medoids[current]);
            let dn = d.get(p, new);
            if dn < dc || (dn == dc && slot < current) {
                state.assignment[p] = slot;
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PamReport {
    pub cost: f64,
    pub iterations: u64,
    pub converged: bool,
}

/// Alternating PAM until no medoid moves. A medoid moves only to a member
/// with strictly smaller in-cluster cost (lowest index among equals).
pub fn local_optimise(state: &mut MedoidState, d: &DissimilarityMatrix) -> Result<PamReport> {
    check_state(state, d)?;
    Ok(optimise_unchecked(state, d, MAX_PAM_ITERATIONS))
}

/// One PAM iteration: each medoid moves to the member of its cluster with
/// strictly smaller in-cluster cost, then every point is reassigned.
/// Returns whether any medoid moved.
pub fn pam_step(state: &mut MedoidState, d: &DissimilarityMatrix) -> Result<bool> {
    check_state(state, d)?;
    let mut members = vec![Vec::new(); state.medoids.len()];
    Ok(step_unchecked(state, d, &mut members))
}

fn step_unchecked(state: &mut MedoidState, d: &DissimilarityMatrix, members: &mut [Vec<usize>]) -> bool {
    for m in members.iter_mut() {
        m.clear();
    }
    for (p, &slot) in state.assignment.iter().enumerate() {
        members[slot].push(p);
    }
    let mut moved = false;
    for (slot, cluster) in members.iter().enumerate() {
        let within = |c: usize| -> f64 { cluster.iter().map(|&q| d.get(c, q)).sum() };
        let mut best = state.medoids[slot];
        let mut best_cost = within(best);
        for &c in cluster {
            let cost = within(c);
            if cost < best_cost {
                best_cost = cost;
                best = c;
            }
        }
        if best != state.medoids[slot] {
            state.medoids[slot] = best;
            moved = true;
        }
    }
    if moved {
        state.assignment = assign_all(&state.medoids, d);
    }
    moved
}

fn optimise_unchecked(state: &mut MedoidState, d: &DissimilarityMatrix, cap: u64) -> PamReport {
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); state.medoids.len()];
    let mut iterations = 0;
    let mut converged = false;
    state.assignment = assign_all(&state.medoids, d);
    while iterations < cap {
        iterations += 1;
        if !step_unchecked(state, d, &mut members) {
            converged = true;
            break;
        }
    }
    PamReport { cost: medoid_cost(state, d), iterations, converged }
}

/// k-medoids over a borrowed dissimilarity matrix.
#[derive(Debug, Clone)]
pub struct KMedoids<'a> {
    d: &'a DissimilarityMatrix,
    k: usize,
}

impl<'a> KMedoids<'a> {
    pub fn new(d: &'a DissimilarityMatrix, k: usize) -> Result<Self> {
        if k == 0 || k > d.n {
            return Err(Error::Domain(format!("k = {k} needs 1 <= k <= n = {}", d.n)));
        }
        Ok(Self { d, k })
    }
}

impl Problem for KMedoids<'_> {
    type State = MedoidState;

    fn group_count(&self) -> usize {
        self.k
    }

    fn cost(&self, state: &MedoidState) -> f64 {
        medoid_cost(state, self.d)
    }

    fn full_init<R: Rng + ?Sized>(&self, rng: &mut R) -> MedoidState {
        init_medoids(self.d, self.k, rng).expect("k validated at construction")
    }

    fn local_optimise<R: Rng + ?Sized>(&self, state: &mut MedoidState, _rng: &mut R) -> Result<LocalOutcome> {
        let r = optimise_unchecked(state, self.d, MAX_PAM_ITERATIONS);
        Ok(LocalOutcome { cost: r.cost, evaluations: r.iterations, converged: r.converged })
    }

    /// Medoids are discrete; a perturbation spec has no meaning here and is ignored.
    fn reinit_groups<R: Rng + ?Sized>(
        &self,
        state: &mut MedoidState,
        groups: &[usize],
        _perturbation: Option<&PerturbationSpec>,
        rng: &mut R,
    ) {
        reinit_groups(state, self.d, groups, rng);
    }
}
