//! Lloyd's k-means as a problem backend.
//!
//! One variable group per cluster center. Full initialisation is Forgy's
//! method (centers on distinct random data points); a partial
//! reinitialisation moves the named centers to random data points.

use rand::Rng;

use crate::engine::{perturb_value, LocalOutcome, PerturbationSpec, Problem};
use crate::error::{Error, Result};

/// Safety cap on Lloyd iterations per local optimisation.
pub const MAX_LLOYD_ITERATIONS: u64 = 10_000;

/// `n` points in `d` dimensions, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    n: usize,
    d: usize,
    coords: Vec<f64>,
}

impl PointSet {
    pub fn new(n: usize, d: usize, coords: Vec<f64>) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(Error::Config(format!("point set needs n, d > 0 (got {n} x {d})")));
        }
        if coords.len() != n * d {
            return Err(Error::Config(format!(
                "expected {} coordinates for {n} x {d} points, got {}",
                n * d,
                coords.len()
            )));
        }
        if let Some(i) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::Domain(format!("non-finite coordinate in point {}", i / d)));
        }
        Ok(Self { n, d, coords })
    }

    /// Builds from rows; all rows must have the same length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::Config("rows have differing dimensions".into()));
        }
        Self::new(rows.len(), d, rows.concat())
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.d..(i + 1) * self.d]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.d)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansState {
    /// `k x d`, row-major.
    pub centers: Vec<f64>,
    /// Cluster index of every point.
    pub assignment: Vec<usize>,
    pub k: usize,
}

impl KMeansState {
    pub fn center(&self, c: usize) -> &[f64] {
        let d = self.centers.len() / self.k;
        &self.centers[c * d..(c + 1) * d]
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Index of the nearest center; ties go to the lowest index.
fn nearest(point: &[f64], centers: &[f64], d: usize) -> usize {
    let mut best = 0;
    let mut best_dist = f64::INFINITY;
    for (c, center) in centers.chunks_exact(d).enumerate() {
        let dist = sq_dist(point, center);
        if dist < best_dist {
            best_dist = dist;
            best = c;
        }
    }
    best
}

fn assign_nearest(centers: &[f64], data: &PointSet, out: &mut [usize]) {
    for (slot, p) in out.iter_mut().zip(data.iter()) {
        *slot = nearest(p, centers, data.d);
    }
}

fn check_dims(state: &KMeansState, data: &PointSet) -> Result<()> {
    if state.k == 0 || state.centers.len() != state.k * data.d || state.assignment.len() != data.n {
        return Err(Error::Config(format!(
            "state ({} centers, {} coordinates, {} assignments) does not fit {} x {} data",
            state.k,
            state.centers.len(),
            state.assignment.len(),
            data.n,
            data.d
        )));
    }
    if let Some(&a) = state.assignment.iter().find(|&&a| a >= state.k) {
        return Err(Error::Config(format!("assignment {a} out of range for k = {}", state.k)));
    }
    Ok(())
}

/// Within-cluster sum of squared distances under the stored assignment.
pub fn wcss(state: &KMeansState, data: &PointSet) -> Result<f64> {
    check_dims(state, data)?;
    Ok(wcss_unchecked(state, data))
}

fn wcss_unchecked(state: &KMeansState, data: &PointSet) -> f64 {
    data.iter().zip(&state.assignment).map(|(p, &c)| sq_dist(p, state.center(c))).sum()
}

/// Forgy initialisation: `k` distinct data points as centers, nearest assignment.
pub fn forgy_init<R: Rng + ?Sized>(data: &PointSet, k: usize, rng: &mut R) -> Result<KMeansState> {
    if k == 0 || k > data.n {
        return Err(Error::Domain(format!("k = {k} needs 1 <= k <= n = {}", data.n)));
    }
    let picks = rand::seq::index::sample(rng, data.n, k);
    let mut centers = Vec::with_capacity(k * data.d);
    for i in picks.iter() {
        centers.extend_from_slice(data.point(i));
    }
    let mut assignment = vec![0; data.n];
    assign_nearest(&centers, data, &mut assignment);
    Ok(KMeansState { centers, assignment, k })
}

/// Moves every center to the centroid of its cluster. Empty clusters get a
/// uniformly random data point.
fn update_centers<R: Rng + ?Sized>(state: &mut KMeansState, data: &PointSet, rng: &mut R) {
    let d = data.d;
    let mut sums = vec![0.0; state.k * d];
    let mut counts = vec![0usize; state.k];
    for (p, &c) in data.iter().zip(&state.assignment) {
        counts[c] += 1;
        for (s, x) in sums[c * d..(c + 1) * d].iter_mut().zip(p) {
            *s += x;
        }
    }
    for c in 0..state.k {
        let center = &mut state.centers[c * d..(c + 1) * d];
        if counts[c] == 0 {
            center.copy_from_slice(data.point(rng.random_range(0..data.n)));
        } else {
            let inv = counts[c] as f64;
            for (dst, s) in center.iter_mut().zip(&sums[c * d..(c + 1) * d]) {
                *dst = s / inv;
            }
        }
    }
}

/// One Lloyd iteration: assign every point to its nearest center, then move
/// each center to its cluster's centroid.
pub fn lloyd_step<R: Rng + ?Sized>(state: &KMeansState, data: &PointSet, rng: &mut R) -> Result<KMeansState> {
    check_dims(state, data)?;
    let mut next = state.clone();
    assign_nearest(&state.centers, data, &mut next.assignment);
    update_centers(&mut next, data, rng);
    Ok(next)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LloydReport {
    pub wcss: f64,
    /// Assignment passes performed, including the final one that confirmed
    /// the fixed point.
    pub iterations: u64,
    pub converged: bool,
}

/// Iterates Lloyd steps until the assignment stops changing. On return the
/// assignment is nearest-center for the final centers.
pub fn local_optimise<R: Rng + ?Sized>(
    state: &mut KMeansState,
    data: &PointSet,
    rng: &mut R,
) -> Result<LloydReport> {
    check_dims(state, data)?;
    Ok(optimise_unchecked(state, data, MAX_LLOYD_ITERATIONS, rng))
}

fn optimise_unchecked<R: Rng + ?Sized>(
    state: &mut KMeansState,
    data: &PointSet,
    cap: u64,
    rng: &mut R,
) -> LloydReport {
    let mut scratch = vec![0; data.n];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < cap {
        iterations += 1;
        assign_nearest(&state.centers, data, &mut scratch);
        if iterations > 1 && scratch == state.assignment {
            converged = true;
            break;
        }
        std::mem::swap(&mut scratch, &mut state.assignment);
        update_centers(state, data, rng);
    }
    if !converged {
        // Leave the state consistent even when the cap was hit.
        assign_nearest(&state.centers, data, &mut state.assignment);
    }
    LloydReport { wcss: wcss_unchecked(state, data), iterations, converged }
}

/// k-means over a borrowed point set.
#[derive(Debug, Clone)]
pub struct KMeans<'a> {
    data: &'a PointSet,
    k: usize,
}

impl<'a> KMeans<'a> {
    pub fn new(data: &'a PointSet, k: usize) -> Result<Self> {
        if k == 0 || k > data.n {
            return Err(Error::Domain(format!("k = {k} needs 1 <= k <= n = {}", data.n)));
        }
        Ok(Self { data, k })
    }

    pub fn data(&self) -> &PointSet {
        self.data
    }
}

impl Problem for KMeans<'_> {
    type State = KMeansState;

    fn group_count(&self) -> usize {
        self.k
    }

    fn cost(&self, state: &KMeansState) -> f64 {
        wcss_unchecked(state, self.data)
    }

    fn full_init<R: Rng + ?Sized>(&self, rng: &mut R) -> KMeansState {
        forgy_init(self.data, self.k, rng).expect("k validated at construction")
    }

    fn local_optimise<R: Rng + ?Sized>(&self, state: &mut KMeansState, rng: &mut R) -> Result<LocalOutcome> {
        let report = optimise_unchecked(state, self.data, MAX_LLOYD_ITERATIONS, rng);
        Ok(LocalOutcome { cost: report.wcss, evaluations: report.iterations, converged: report.converged })
    }

    fn reinit_groups<R: Rng + ?Sized>(
        &self,
        state: &mut KMeansState,
        groups: &[usize],
        perturbation: Option<&PerturbationSpec>,
        rng: &mut R,
    ) {
        reinit_groups(state, self.data, groups, perturbation, rng);
    }
}

/// Resets the named centers to uniformly random data points (or, with a
/// perturbation spec, blends each coordinate with Gaussian noise) and
/// refreshes the assignment.
pub fn reinit_groups<R: Rng + ?Sized>(
    state: &mut KMeansState,
    data: &PointSet,
    centers: &[usize],
    perturbation: Option<&PerturbationSpec>,
    rng: &mut R,
) {
    if centers.is_empty() {
        return;
    }
    let d = data.d;
    for &c in centers {
        let center = &mut state.centers[c * d..(c + 1) * d];
        match perturbation {
            None => center.copy_from_slice(data.point(rng.random_range(0..data.n))),
            Some(spec) => {
                for x in center.iter_mut() {
                    *x = perturb_value(*x, spec, rng);
                }
            }
        }
    }
    assign_nearest(&state.centers, data, &mut state.assignment);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    fn line(xs: &[f64]) -> PointSet {
        PointSet::new(xs.len(), 1, xs.to_vec()).unwrap()
    }

    fn state_1d(centers: &[f64], data: &PointSet) -> KMeansState {
        let mut assignment = vec![0; data.len()];
        assign_nearest(centers, data, &mut assignment);
        KMeansState { centers: centers.to_vec(), assignment, k: centers.len() }
    }

    #[test]
    fn wcss_hand_values() {
        let two = PointSet::from_rows(&[vec![0.0, 0.0], vec![0.0, 2.0]]).unwrap();
        let s = KMeansState { centers: vec![0.0, 1.0], assignment: vec![0, 0], k: 1 };
        assert_eq!(wcss(&s, &two).unwrap(), 2.0);

        let four = line(&[0.0, 1.0, 10.0, 11.0]);
        let own = state_1d(&[0.0, 1.0, 10.0, 11.0], &four);
        assert_eq!(wcss(&own, &four).unwrap(), 0.0);
        assert_eq!(wcss(&state_1d(&[0.5, 10.5], &four), &four).unwrap(), 1.0);
    }

    #[test]
    fn wcss_dimension_mismatch() {
        let four = line(&[0.0, 1.0, 10.0, 11.0]);
        let bad = KMeansState { centers: vec![0.0, 1.0], assignment: vec![0; 3], k: 2 };
        assert!(matches!(wcss(&bad, &four), Err(Error::Config(_))));
    }

    #[test]
    fn forgy_edge_cases() {
        let four = line(&[0.0, 1.0, 10.0, 11.0]);
        let mut rng = seeded(1);
        let s = forgy_init(&four, 4, &mut rng).unwrap();
        let mut c = s.centers.clone();
        c.sort_by(f64::total_cmp);
        assert_eq!(c, vec![0.0, 1.0, 10.0, 11.0]);
        assert_eq!(wcss(&s, &four).unwrap(), 0.0);

        let s = forgy_init(&four, 1, &mut rng).unwrap();
        assert!([0.0, 1.0, 10.0, 11.0].contains(&s.centers[0]));
        assert!(matches!(forgy_init(&four, 5, &mut rng), Err(Error::Domain(_))));
    }

    #[test]
    fn forgy_selection_frequency() {
        let data = line(&(0..100).map(f64::from).collect::<Vec<_>>());
        let seeds = 10_000;
        let mut counts = vec![0u32; 100];
        for seed in 0..seeds {
            let s = forgy_init(&data, 5, &mut seeded(seed)).unwrap();
            for &c in &s.centers {
                counts[c as usize] += 1;
            }
        }
        let tol = 3.0 * (0.05f64 * 0.95 / seeds as f64).sqrt();
        // 100 simultaneous 3-sigma checks: allow a single excursion.
        let outliers = counts.iter().filter(|&&c| (c as f64 / seeds as f64 - 0.05).abs() >= tol).count();
        assert!(outliers <= 1, "{outliers} points outside 3 sigma");
    }

    #[test]
    fn lloyd_step_hand_trace() {
        let four = line(&[0.0, 1.0, 10.0, 11.0]);
        let s = state_1d(&[0.0, 11.0], &four);
        let next = lloyd_step(&s, &four, &mut seeded(0)).unwrap();
        assert_eq!(next.centers, vec![0.5, 10.5]);
        let again = lloyd_step(&next, &four, &mut seeded(0)).unwrap();
        assert_eq!(again, next);
    }

    #[test]
    fn every_forgy_start_on_four_points() {
        // All 12 ordered center pairs (6 unordered Forgy starts).
        let xs = [0.0, 1.0, 10.0, 11.0];
        let four = line(&xs);
        for i in 0..4 {
            for j in 0..4 {
                if i == j {
                    continue;
                }
                let mut s = state_1d(&[xs[i], xs[j]], &four);
                let report = local_optimise(&mut s, &four, &mut seeded(0)).unwrap();
                assert!(report.converged);
                // Assignment passes minus the confirming pass = Lloyd steps.
                assert!(report.iterations - 1 <= 3, "start ({i},{j}) took {}", report.iterations);
                assert_eq!(report.wcss, 1.0, "start ({i},{j})");
            }
        }
    }

    #[test]
    fn optimum_is_fixed_point() {
        let four = line(&[0.0, 1.0, 10.0, 11.0]);
        let mut s = state_1d(&[0.5, 10.5], &four);
        let before = s.clone();
        let report = local_optimise(&mut s, &four, &mut seeded(0)).unwrap();
        assert_eq!(s, before);
        assert_eq!(report.iterations, 2);
    }

    #[test]
    fn empty_cluster_is_repaired() {
        let four = line(&[0.0, 1.0, 10.0, 11.0]);
        // Center at 100 attracts nobody.
        let s = state_1d(&[5.0, 100.0], &four);
        let next = lloyd_step(&s, &four, &mut seeded(3)).unwrap();
        assert!([0.0, 1.0, 10.0, 11.0].contains(&next.centers[1]));
        assert_eq!(next.centers[0], 5.5);
    }

    #[test]
    fn reinit_locality() {
        let data = PointSet::from_rows(&[
            vec![0.0, 0.0],
            vec![1.0, 0.5],
            vec![7.0, 3.0],
            vec![9.0, 9.0],
            vec![2.0, 8.0],
        ])
        .unwrap();
        let mut rng = seeded(5);
        let mut s = forgy_init(&data, 3, &mut rng).unwrap();
        local_optimise(&mut s, &data, &mut rng).unwrap();
        let before = s.clone();
        reinit_groups(&mut s, &data, &[], None, &mut rng);
        assert_eq!(s, before);

        reinit_groups(&mut s, &data, &[1], None, &mut rng);
        assert_eq!(s.center(0), before.center(0));
        assert_eq!(s.center(2), before.center(2));
        assert!(data.iter().any(|p| p == s.center(1)));
    }

    #[test]
    fn perturbed_reinit_blends() {
        let four = line(&[0.0, 1.0, 10.0, 11.0]);
        let mut s = state_1d(&[0.5, 10.5], &four);
        let keep = PerturbationSpec::new(1.0, 0.0, 3.0).unwrap();
        reinit_groups(&mut s, &four, &[0], Some(&keep), &mut seeded(1));
        assert_eq!(s.centers, vec![0.5, 10.5]);
        let pin = PerturbationSpec::new(0.0, 4.0, 0.0).unwrap();
        reinit_groups(&mut s, &four, &[1], Some(&pin), &mut seeded(1));
        assert_eq!(s.centers, vec![0.5, 4.0]);
    }
}
