use partial_reinit::hmm::{self, HmmTraining, ObsSeq};
use partial_reinit::kmeans::{self, KMeans, PointSet};
use partial_reinit::kmedoids::{self, DissimilarityMatrix, KMedoids};
use partial_reinit::oracle::{kmeans_bruteforce, kmedoids_bruteforce};
use partial_reinit::rbm::{bernoulli_reset, RbmParams, ResetPolicy};
use partial_reinit::rng::seeded;
use partial_reinit::{
    checkpoint_accept, pick_random_subset, required_reinits, run_hierarchy, Budget, Decision, Level,
    MLevelParams, PerturbationSpec, Problem, ReinitSchedule, TraceRecord,
};
use proptest::prelude::*;

fn points(max_n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-50i32..50, 3..=max_n).prop_map(|v| v.into_iter().map(f64::from).collect())
}

/// Strictly increasing subset sizes ending at `groups`, with random repeats.
fn schedule(groups: usize) -> impl Strategy<Value = ReinitSchedule> {
    prop::collection::btree_set(1..groups.max(2), 0..groups.min(3)).prop_flat_map(move |sizes| {
        let sizes: Vec<usize> = sizes.into_iter().filter(|&s| s < groups).collect();
        prop::collection::vec(1u64..5, sizes.len()).prop_map(move |reps| {
            let mut levels: Vec<Level> = sizes.iter().zip(reps).map(|(&s, m)| Level::new(s, m)).collect();
            levels.push(Level::unbounded(groups));
            ReinitSchedule::new(levels).unwrap()
        })
    })
}

fn check_trace(records: &[TraceRecord]) {
    assert!(!records.is_empty());
    for w in records.windows(2) {
        assert!(w[1].best_cost <= w[0].best_cost);
        assert!(w[1].cost_evaluations >= w[0].cost_evaluations);
        assert!(w[1].level0_calls >= w[0].level0_calls);
        assert!(w[1].wall_seconds >= w[0].wall_seconds);
    }
}

fn line(xs: &[f64]) -> PointSet {
    PointSet::new(xs.len(), 1, xs.to_vec()).unwrap()
}

fn matrix(xs: &[f64]) -> DissimilarityMatrix {
    let rows: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x]).collect();
    DissimilarityMatrix::squared_euclidean(&rows).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kmeans_runs_keep_trace_invariants(xs in points(9), k in 1usize..4, seed in any::<u64>(), calls in 1u64..40) {
        prop_assume!(k <= xs.len());
        let data = line(&xs);
        let problem = KMeans::new(&data, k).unwrap();
        let sched = ReinitSchedule::two_level(k, 1.min(k), 3).unwrap_or_else(|_| ReinitSchedule::full(k).unwrap());
        let trace = run_hierarchy(&problem, &sched, &Budget::level0_calls(calls), None, seed).unwrap();
        check_trace(&trace.records);
        // One initial record plus one per level-0 return.
        prop_assert_eq!(trace.records.len() as u64, calls + 1);
        prop_assert_eq!(trace.best_cost(), trace.records.last().unwrap().best_cost);
        prop_assert_eq!(trace.best_cost(), problem.cost(trace.final_best.state()));
        let optimum = kmeans_bruteforce(&data, k).unwrap().optimum_cost;
        prop_assert!(trace.best_cost() >= optimum - 1e-9 * (1.0 + optimum));
    }

    #[test]
    fn kmedoids_never_beats_the_oracle(xs in points(10), seed in any::<u64>(), sched in schedule(3)) {
        let d = matrix(&xs);
        let problem = KMedoids::new(&d, 3).unwrap();
        let trace = run_hierarchy(&problem, &sched, &Budget::level0_calls(30), None, seed).unwrap();
        check_trace(&trace.records);
        let optimum = kmedoids_bruteforce(&d, 3).unwrap().optimum_cost;
        prop_assert!(trace.best_cost() >= optimum);
    }

    #[test]
    fn hmm_runs_are_reproducible(bits in "[01]{1,12}", seed in any::<u64>(), sched in schedule(3)) {
        let seq = ObsSeq::from_bits(&bits).unwrap();
        let problem = HmmTraining::new(&seq, 3).unwrap();
        let budget = Budget::cost_evaluations(200);
        let a = run_hierarchy(&problem, &sched, &budget, None, seed).unwrap();
        let b = run_hierarchy(&problem, &sched, &budget, None, seed).unwrap();
        check_trace(&a.records);
        let strip = |r: &[TraceRecord]| r.iter().map(|t| (t.cost_evaluations, t.level0_calls, t.best_cost.to_bits())).collect::<Vec<_>>();
        prop_assert_eq!(strip(&a.records), strip(&b.records));
        prop_assert_eq!(a.stats, b.stats);
    }

    #[test]
    fn kmeans_reinit_touches_only_named_centers(xs in points(12), seed in any::<u64>(), pick in prop::collection::btree_set(0usize..3, 0..=3), perturb in any::<bool>()) {
        let data = line(&xs);
        let mut rng = seeded(seed);
        let mut state = kmeans::forgy_init(&data, 3, &mut rng).unwrap();
        let before = state.clone();
        let groups: Vec<usize> = pick.iter().copied().collect();
        let spec = PerturbationSpec::new(0.5, 0.0, 1.0).unwrap();
        kmeans::reinit_groups(&mut state, &data, &groups, perturb.then_some(&spec), &mut rng);
        for c in 0..3 {
            if !pick.contains(&c) {
                prop_assert_eq!(state.center(c), before.center(c));
            } else if !perturb {
                prop_assert!(xs.contains(&state.center(c)[0]));
            }
        }
    }

    #[test]
    fn kmedoids_reinit_touches_only_named_slots(xs in points(12), seed in any::<u64>(), pick in prop::collection::btree_set(0usize..3, 0..=3)) {
        let d = matrix(&xs);
        let mut rng = seeded(seed);
        let mut state = kmedoids::init_medoids(&d, 3, &mut rng).unwrap();
        let before = state.clone();
        let slots: Vec<usize> = pick.iter().copied().collect();
        kmedoids::reinit_groups(&mut state, &d, &slots, &mut rng);
        for s in 0..3 {
            if !pick.contains(&s) {
                prop_assert_eq!(state.medoids[s], before.medoids[s]);
            }
        }
        let mut sorted = state.medoids.clone();
        sorted.sort_unstable();
        sorted.dedup();
        prop_assert_eq!(sorted.len(), 3);
        prop_assert_eq!(&state.assignment, &kmedoids::assign_all(&state.medoids, &d));
    }

    #[test]
    fn hmm_reinit_touches_only_named_rows(n in 1usize..6, seed in any::<u64>(), mask in any::<u8>()) {
        let mut rng = seeded(seed);
        let mut model = hmm::random_model(n, 2, &mut rng);
        let before = model.clone();
        let states: Vec<usize> = (0..n).filter(|s| mask >> s & 1 == 1).collect();
        hmm::reinit_groups(&mut model, &states, None, &mut rng);
        prop_assert_eq!(&model.pi, &before.pi);
        for s in (0..n).filter(|s| !states.contains(s)) {
            prop_assert_eq!(&model.a[s * n..(s + 1) * n], &before.a[s * n..(s + 1) * n]);
            prop_assert_eq!(&model.b[s * 2..(s + 1) * 2], &before.b[s * 2..(s + 1) * 2]);
        }
        for row in model.a.chunks(n).chain(model.b.chunks(2)) {
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rbm_reset_keeps_or_resamples_each_scalar(seed in any::<u64>(), p in 0.0f64..=1.0) {
        let mut rng = seeded(seed);
        let mut params = RbmParams::gaussian(3, 2, 1.0, &mut rng);
        let before = params.to_vec();
        bernoulli_reset(&mut params, &ResetPolicy::new(p, 0.1).unwrap(), &mut rng);
        prop_assert!(params.is_finite());
        prop_assert_eq!(params.len(), before.len());
        if p == 0.0 {
            prop_assert_eq!(params.to_vec(), before);
        }
    }

    #[test]
    fn random_subsets_are_sorted_and_distinct(n in 1usize..40, k in 0usize..40, seed in any::<u64>()) {
        let mut rng = seeded(seed);
        match pick_random_subset(n, k, &mut rng) {
            Ok(s) => {
                prop_assert!(k <= n);
                prop_assert_eq!(s.len(), k);
                prop_assert!(s.windows(2).all(|w| w[0] < w[1]));
                prop_assert!(s.iter().all(|&i| i < n));
            }
            Err(_) => prop_assert!(k > n),
        }
    }

    #[test]
    fn required_reinits_is_the_smallest_sufficient_count(delta in 1e-6f64..0.999, eps in 1e-4f64..0.999) {
        let m = required_reinits(MLevelParams::new(delta, eps).unwrap());
        let miss = |m: u64| (1.0 - eps).powf(m as f64);
        prop_assert!(miss(m) <= delta * (1.0 + 1e-9));
        if m > 1 {
            prop_assert!(miss(m - 1) > delta * (1.0 - 1e-9));
        }
    }

    #[test]
    fn checkpoint_reverts_only_on_strict_increase(a in -1e6f64..1e6, b in -1e6f64..1e6) {
        let d = checkpoint_accept(a, b).unwrap();
        prop_assert_eq!(d == Decision::Revert, a > b);
    }
}
