//! Brute-force reference computations.
//!
//! Every function here enumerates its search space exhaustively and refuses
//! instances whose space exceeds a hard limit. None of them is used by the
//! optimisers.

use rand::Rng;

use crate::engine::{required_reinits, MLevelParams};
use crate::error::{Error, Result};
use crate::hmm::{HmmModel, ObsSeq};
use crate::kmeans::PointSet;
use crate::kmedoids::DissimilarityMatrix;
use crate::rbm::{BinaryDataset, RbmParams};
use crate::rng::seeded;

/// Largest search space any oracle will enumerate.
pub const MAX_ENUMERATION: u64 = 1_000_000;

/// Largest joint state count `2^(n_visible + n_hidden)` for the RBM oracle.
pub const MAX_RBM_JOINT: u64 = 1 << 20;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult<W> {
    pub optimum_cost: f64,
    pub witness: W,
    pub search_space_size: u64,
}

fn checked_pow(base: u64, exp: usize) -> Option<u64> {
    u32::try_from(exp).ok().and_then(|e| base.checked_pow(e))
}

fn binomial(n: u64, k: u64) -> Option<u64> {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * u128::from(n - i) / u128::from(i + 1);
        if acc > u128::from(u64::MAX) {
            return None;
        }
    }
    Some(acc as u64)
}

fn too_large(what: &str, size: Option<u64>, limit: u64) -> Error {
    match size {
        Some(s) => Error::Domain(format!("{what} search space {s} exceeds the limit {limit}")),
        None => Error::Domain(format!("{what} search space overflows u64")),
    }
}

/// Global minimum WCSS over all `k^n` point-to-cluster assignments, each
/// cluster represented by its centroid. The witness is the assignment.
pub fn kmeans_bruteforce(data: &PointSet, k: usize) -> Result<OracleResult<Vec<usize>>> {
    let n = data.len();
    if k == 0 || k > n {
        return Err(Error::Domain(format!("k = {k} must lie in 1..={n}")));
    }
    let size = checked_pow(k as u64, n).filter(|&s| s <= MAX_ENUMERATION);
    let Some(size) = size else {
        return Err(too_large("k-means", checked_pow(k as u64, n), MAX_ENUMERATION));
    };
    let d = data.dim();
    let mut assignment = vec![0usize; n];
    let mut best = (f64::INFINITY, assignment.clone());
    // Centroids are accumulated as offsets from each cluster's first point,
    // which keeps coincident points at exactly zero cost.
    let mut anchors = vec![usize::MAX; k];
    let mut sums = vec![0.0; k * d];
    let mut counts = vec![0usize; k];
    for _ in 0..size {
        anchors.iter_mut().for_each(|a| *a = usize::MAX);
        sums.iter_mut().for_each(|s| *s = 0.0);
        counts.iter_mut().for_each(|c| *c = 0);
        for (i, &c) in assignment.iter().enumerate() {
            if anchors[c] == usize::MAX {
                anchors[c] = i;
            }
            counts[c] += 1;
            let (p, a) = (data.point(i), data.point(anchors[c]));
            for ((s, x), y) in sums[c * d..(c + 1) * d].iter_mut().zip(p).zip(a) {
                *s += x - y;
            }
        }
        let mut cost = 0.0;
        for (i, &c) in assignment.iter().enumerate() {
            let inv = 1.0 / counts[c] as f64;
            let (p, a) = (data.point(i), data.point(anchors[c]));
            cost += p
                .iter()
                .zip(a)
                .zip(&sums[c * d..(c + 1) * d])
                .map(|((x, y), s)| (x - y - s * inv).powi(2))
                .sum::<f64>();
        }
        if cost < best.0 {
            best = (cost, assignment.clone());
        }
        // Odometer increment in base k.
        for digit in assignment.iter_mut() {
            *digit += 1;
            if *digit < k {
                break;
            }
            *digit = 0;
        }
    }
    Ok(OracleResult { optimum_cost: best.0, witness: best.1, search_space_size: size })
}

/// Global minimum medoid cost over all `C(n, k)` medoid sets. The witness
/// is the sorted medoid set.
pub fn kmedoids_bruteforce(d: &DissimilarityMatrix, k: usize) -> Result<OracleResult<Vec<usize>>> {
    let n = d.len();
    if k == 0 || k > n {
        return Err(Error::Domain(format!("k = {k} must lie in 1..={n}")));
    }
    let count = binomial(n as u64, k as u64);
    let Some(size) = count.filter(|&s| s <= MAX_ENUMERATION) else {
        return Err(too_large("k-medoids", count, MAX_ENUMERATION));
    };
    let mut combo: Vec<usize> = (0..k).collect();
    let mut best = (f64::INFINITY, combo.clone());
    loop {
        let cost: f64 =
            (0..n).map(|i| combo.iter().map(|&m| d.get(i, m)).fold(f64::INFINITY, f64::min)).sum();
        if cost < best.0 {
            best = (cost, combo.clone());
        }
        // Next k-combination in lexicographic order.
        let Some(pos) = (0..k).rev().find(|&i| combo[i] < n - k + i) else {
            break;
        };
        combo[pos] += 1;
        for i in pos + 1..k {
            combo[i] = combo[i - 1] + 1;
        }
    }
    Ok(OracleResult { optimum_cost: best.0, witness: best.1, search_space_size: size })
}

/// `ln P(seq | model)` by summing the joint probability of every hidden
/// path.
pub fn hmm_bruteforce(model: &HmmModel, seq: &ObsSeq) -> Result<f64> {
    if seq.n_symbols() != model.n_symbols() {
        return Err(Error::Config("sequence and model alphabets differ".into()));
    }
    let (ns, t) = (model.n_states(), seq.len());
    let count = checked_pow(ns as u64, t);
    let Some(size) = count.filter(|&s| s <= MAX_ENUMERATION) else {
        return Err(too_large("HMM path", count, MAX_ENUMERATION));
    };
    let obs = seq.symbols();
    let mut path = vec![0usize; t];
    let mut total = 0.0;
    for _ in 0..size {
        let mut p = model.pi[path[0]] * model.emit(path[0], obs[0]);
        for s in 1..t {
            p *= model.trans(path[s - 1], path[s]) * model.emit(path[s], obs[s]);
        }
        total += p;
        for state in path.iter_mut() {
            *state += 1;
            if *state < ns {
                break;
            }
            *state = 0;
        }
    }
    Ok(total.ln())
}

fn logsumexp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

fn neg_energy(params: &RbmParams, v: &[bool], h: &[bool]) -> f64 {
    let nh = params.n_hidden();
    let mut e = 0.0;
    for (i, &vi) in v.iter().enumerate() {
        if vi {
            e += params.a[i];
            for (j, &hj) in h.iter().enumerate() {
                if hj {
                    e += params.w[i * nh + j];
                }
            }
        }
    }
    e + h.iter().zip(&params.b).filter(|(on, _)| **on).map(|(_, b)| b).sum::<f64>()
}

fn bits(code: usize, n: usize) -> Vec<bool> {
    (0..n).map(|i| (code >> i) & 1 == 1).collect()
}

/// Mean log-likelihood of the data minus `(lambda / 2) * sum W^2`, with
/// both the partition function and the marginals summed over every joint
/// `(v, h)` state.
pub fn rbm_bruteforce(params: &RbmParams, data: &BinaryDataset, lambda: f64) -> Result<f64> {
    let (nv, nh) = (params.n_visible(), params.n_hidden());
    if data.n_visible() != nv {
        return Err(Error::Config("data and model visible sizes differ".into()));
    }
    let joint = checked_pow(2, nv + nh);
    if !matches!(joint, Some(s) if s <= MAX_RBM_JOINT) {
        return Err(too_large("RBM joint", joint, MAX_RBM_JOINT));
    }
    let hidden: Vec<Vec<bool>> = (0..1usize << nh).map(|c| bits(c, nh)).collect();
    let marginal = |v: &[bool]| {
        let terms: Vec<f64> = hidden.iter().map(|h| neg_energy(params, v, h)).collect();
        logsumexp(&terms)
    };
    let per_visible: Vec<f64> = (0..1usize << nv).map(|c| marginal(&bits(c, nv))).collect();
    let log_z = logsumexp(&per_visible);
    let mean: f64 = data
        .samples()
        .map(|s| {
            let v: Vec<bool> = s.iter().map(|&b| b == 1).collect();
            marginal(&v)
        })
        .sum::<f64>()
        / data.len() as f64;
    let penalty = 0.5 * lambda * params.w.iter().map(|w| w * w).sum::<f64>();
    Ok(mean - log_z - penalty)
}

/// Fraction of `trials` in which at least one of `required_reinits(params)`
/// independent attempts, each succeeding with probability `epsilon`,
/// succeeds.
pub fn mc_validate_mlevel(params: MLevelParams, trials: u64, seed: u64) -> Result<f64> {
    if trials == 0 {
        return Err(Error::Config("need at least one trial".into()));
    }
    let attempts = required_reinits(params);
    let mut rng = seeded(seed);
    let successes =
        (0..trials).filter(|_| (0..attempts).any(|_| rng.random::<f64>() < params.epsilon())).count();
    Ok(successes as f64 / trials as f64)
}

/// Central differences `(f(x + h e_i) - f(x - h e_i)) / 2h` for every
/// coordinate.
pub fn finite_diff_gradient<F>(objective: F, x: &[f64], h: f64) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> f64,
{
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::Domain(format!("step {h} must be positive")));
    }
    let mut probe = x.to_vec();
    let mut grad = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        probe[i] = x[i] + h;
        let up = objective(&probe);
        probe[i] = x[i] - h;
        let down = objective(&probe);
        probe[i] = x[i];
        grad.push((up - down) / (2.0 * h));
    }
    Ok(grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hmm::{log_likelihood, random_model};
    use crate::rbm::{exact_gradient, exact_objective, gen_training_data};

    fn line(xs: &[f64]) -> PointSet {
        PointSet::new(xs.len(), 1, xs.to_vec()).unwrap()
    }

    fn six_point() -> DissimilarityMatrix {
        let pts: Vec<Vec<f64>> = [0.0, 1.0, 2.0, 10.0, 11.0, 12.0].iter().map(|&x| vec![x]).collect();
        DissimilarityMatrix::squared_euclidean(&pts).unwrap()
    }

    #[test]
    fn kmeans_four_points() {
        let r = kmeans_bruteforce(&line(&[0.0, 1.0, 10.0, 11.0]), 2).unwrap();
        assert_eq!(r.optimum_cost, 1.0);
        assert_eq!(r.search_space_size, 16);
        assert_eq!(r.witness[0], r.witness[1]);
        assert_ne!(r.witness[1], r.witness[2]);
    }

    #[test]
    fn kmeans_trivial_cases() {
        let xs = [0.5, 3.0, -2.0, 7.25, 1.0];
        assert_eq!(kmeans_bruteforce(&line(&xs), xs.len()).unwrap().optimum_cost, 0.0);
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let ss: f64 = xs.iter().map(|x| (x - mean).powi(2)).sum();
        let r = kmeans_bruteforce(&line(&xs), 1).unwrap();
        assert!((r.optimum_cost - ss).abs() < 1e-12);
    }

    #[test]
    fn kmeans_guard() {
        let xs: Vec<f64> = (0..13).map(f64::from).collect();
        assert!(matches!(kmeans_bruteforce(&line(&xs), 3), Err(Error::Domain(_))));
        assert!(kmeans_bruteforce(&line(&xs[..12]), 3).is_ok());
        assert!(kmeans_bruteforce(&line(&xs), 0).is_err());
    }

    #[test]
    fn kmedoids_six_points() {
        let r = kmedoids_bruteforce(&six_point(), 2).unwrap();
        assert_eq!(r.optimum_cost, 4.0);
        assert_eq!(r.witness, vec![1, 4]);
        assert_eq!(r.search_space_size, 15);
        assert_eq!(kmedoids_bruteforce(&six_point(), 6).unwrap().optimum_cost, 0.0);
    }

    #[test]
    fn kmedoids_guard() {
        let pts: Vec<Vec<f64>> = (0..40).map(|i| vec![f64::from(i)]).collect();
        let d = DissimilarityMatrix::squared_euclidean(&pts).unwrap();
        // C(40, 6) = 3_838_380.
        assert!(matches!(kmedoids_bruteforce(&d, 6), Err(Error::Domain(_))));
        assert_eq!(kmedoids_bruteforce(&d, 4).unwrap().search_space_size, 91_390);
    }

    #[test]
    fn binomial_values() {
        assert_eq!(binomial(6, 2), Some(15));
        assert_eq!(binomial(30, 3), Some(4060));
        assert_eq!(binomial(10, 0), Some(1));
        assert_eq!(binomial(10, 10), Some(1));
    }

    #[test]
    fn hmm_trivial_cases() {
        let seq = ObsSeq::from_bits("0000").unwrap();
        let det = HmmModel::new(1, 2, vec![1.0], vec![1.0], vec![1.0, 0.0]).unwrap();
        assert_eq!(hmm_bruteforce(&det, &seq).unwrap(), 0.0);
        let seq = ObsSeq::from_bits("0110101").unwrap();
        let u = HmmModel::uniform(3, 2);
        assert!((hmm_bruteforce(&u, &seq).unwrap() - 7.0 * 0.5f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn hmm_matches_scaled_forward() {
        let mut rng = seeded(11);
        let seq = ObsSeq::from_bits("1101").unwrap();
        for _ in 0..20 {
            let m = random_model(2, 2, &mut rng);
            let brute = hmm_bruteforce(&m, &seq).unwrap();
            let fwd = log_likelihood(&m, &seq).unwrap();
            assert!((brute - fwd).abs() <= 1e-10 * brute.abs());
        }
    }

    #[test]
    fn hmm_guard() {
        let seq = ObsSeq::from_bits(&"01".repeat(10)).unwrap();
        assert!(matches!(hmm_bruteforce(&HmmModel::uniform(4, 2), &seq), Err(Error::Domain(_))));
    }

    #[test]
    fn rbm_zero_params() {
        let data = gen_training_data(8, 10, 0.1, &mut seeded(1)).unwrap();
        let o = rbm_bruteforce(&RbmParams::zeros(8, 4), &data, 0.0).unwrap();
        assert!((o + 8.0 * 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn rbm_matches_exact_objective() {
        let mut rng = seeded(12);
        let data = gen_training_data(3, 7, 0.2, &mut rng).unwrap();
        for lambda in [0.0, 0.05] {
            let p = RbmParams::gaussian(3, 2, 0.7, &mut rng);
            let brute = rbm_bruteforce(&p, &data, lambda).unwrap();
            let exact = exact_objective(&p, &data, lambda).unwrap();
            assert!((brute - exact).abs() <= 1e-12 * brute.abs());
        }
    }

    #[test]
    fn rbm_guard() {
        let data = BinaryDataset::new(12, vec![0; 12]).unwrap();
        assert!(matches!(rbm_bruteforce(&RbmParams::zeros(12, 9), &data, 0.0), Err(Error::Domain(_))));
        assert!(rbm_bruteforce(&RbmParams::zeros(12, 8), &data, 0.0).is_ok());
    }

    #[test]
    fn mlevel_single_attempt() {
        let trials = 100_000;
        let rate = mc_validate_mlevel(MLevelParams::new(0.5, 0.5).unwrap(), trials, 3).unwrap();
        assert!((rate - 0.5).abs() < 3.0 * (0.25 / trials as f64).sqrt());
    }

    #[test]
    fn mlevel_forty_four_attempts() {
        let trials = 10_000;
        let rate = mc_validate_mlevel(MLevelParams::new(0.01, 0.1).unwrap(), trials, 4).unwrap();
        assert!(rate >= 0.99 - 3.0 * (0.0099 / trials as f64).sqrt());
    }

    #[test]
    fn mlevel_near_certain_success() {
        let trials = 100_000;
        let rate = mc_validate_mlevel(MLevelParams::new(0.01, 0.99).unwrap(), trials, 5).unwrap();
        assert!((rate - 0.99).abs() < 3.0 * (0.0099 / trials as f64).sqrt());
        assert!(mc_validate_mlevel(MLevelParams::new(0.5, 0.5).unwrap(), 0, 5).is_err());
    }

    #[test]
    fn finite_differences_exact_on_quadratics() {
        for h in [1e-3, 0.5, 2.0] {
            let g = finite_diff_gradient(|x| x[0] * x[0], &[3.0], h).unwrap();
            assert!((g[0] - 6.0).abs() < 1e-9);
        }
        let g = finite_diff_gradient(|x| 2.5 * x[0] - 4.0 * x[1], &[1.0, -7.0], 0.1).unwrap();
        assert!((g[0] - 2.5).abs() < 1e-12 && (g[1] + 4.0).abs() < 1e-12);
        assert!(finite_diff_gradient(|x| x[0], &[0.0], 0.0).is_err());
    }

    #[test]
    fn rbm_gradient_matches_finite_differences() {
        let mut rng = seeded(13);
        let data = gen_training_data(4, 9, 0.1, &mut rng).unwrap();
        let p = RbmParams::gaussian(4, 3, 0.5, &mut rng);
        let lambda = 0.1;
        let analytic = exact_gradient(&p, &data, lambda).unwrap().to_vec();
        let numeric = finite_diff_gradient(
            |x| exact_objective(&p.with_values(x), &data, lambda).unwrap(),
            &p.to_vec(),
            1e-4,
        )
        .unwrap();
        let err = analytic.iter().zip(&numeric).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-6, "{err}");
    }
}
