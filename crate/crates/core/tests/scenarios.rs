use partial_reinit::hmm::{HmmTraining, ObsSeq};
use partial_reinit::kmeans::{KMeans, PointSet};
use partial_reinit::oracle::kmeans_bruteforce;
use partial_reinit::rbm::{exact_objective, gen_training_data, local_optimise, CdConfig, RbmParams};
use partial_reinit::rng::seeded;
use partial_reinit::{run_hierarchy, Budget, Hierarchy, Problem, ReinitSchedule};
use rand::Rng;

#[test]
fn four_points_reach_the_global_optimum() {
    let data = PointSet::new(4, 1, vec![0.0, 1.0, 10.0, 11.0]).unwrap();
    let optimum = kmeans_bruteforce(&data, 2).unwrap().optimum_cost;
    assert_eq!(optimum, 1.0);
    let problem = KMeans::new(&data, 2).unwrap();
    let schedule = ReinitSchedule::two_level(2, 1, 20).unwrap();
    let hits = (0..100)
        .filter(|&seed| {
            let t = run_hierarchy(&problem, &schedule, &Budget::level0_calls(60), None, seed).unwrap();
            t.best_cost() == optimum
        })
        .count();
    assert!(hits >= 99, "{hits}/100 runs at the optimum");
}

#[test]
fn saturated_hmm_memorises_its_sequence() {
    // N >= T with binary output: most starts train the string to certainty.
    let mut rng = seeded(17);
    let mut near_zero = 0;
    for trial in 0..20 {
        let bits: String = (0..8).map(|_| if rng.random::<bool>() { '1' } else { '0' }).collect();
        let seq = ObsSeq::from_bits(&bits).unwrap();
        let problem = HmmTraining::new(&seq, 8).unwrap();
        let mut local = seeded(1000 + trial);
        let mut model = problem.full_init(&mut local);
        let outcome = problem.local_optimise(&mut model, &mut local).unwrap();
        assert!(outcome.converged);
        if outcome.cost < 1e-3 {
            near_zero += 1;
        }
    }
    assert!(near_zero > 10, "{near_zero}/20 starts memorised");
}

#[test]
fn hmm_rarely_hits_the_iteration_cap() {
    // Slow EM crawls on tiny N occasionally exhaust the cap; such calls are
    // flagged, not errors.
    let mut rng = seeded(23);
    let mut capped = Vec::new();
    for seed in 0..100 {
        let t = 1 + seed as usize % 32;
        let n = 1 + (seed as usize * 7) % 32;
        let bits: String = (0..t).map(|_| if rng.random::<bool>() { '1' } else { '0' }).collect();
        let seq = ObsSeq::from_bits(&bits).unwrap();
        let problem = HmmTraining::new(&seq, n).unwrap();
        let mut local = seeded(seed);
        let mut model = problem.full_init(&mut local);
        let outcome = problem.local_optimise(&mut model, &mut local).unwrap();
        if !outcome.converged {
            assert_eq!(outcome.evaluations, 1001);
            capped.push((t, n));
        }
    }
    assert!(capped.len() <= 1, "capped runs {capped:?}");
}

#[test]
fn rbm_training_improves_the_objective() {
    let mut data_rng = seeded(8);
    let data = gen_training_data(8, 100, 0.1, &mut data_rng).unwrap();
    let cd = CdConfig::new(1, 0.01, 1000, 0.0).unwrap();
    let mut before = Vec::new();
    let mut after = Vec::new();
    for seed in 0..25 {
        let mut rng = seeded(seed);
        let mut params = RbmParams::gaussian(8, 10, 0.1, &mut rng);
        before.push(exact_objective(&params, &data, 0.0).unwrap());
        local_optimise(&mut params, &data, &cd, &mut rng).unwrap();
        after.push(exact_objective(&params, &data, 0.0).unwrap());
    }
    let median = |v: &mut Vec<f64>| {
        v.sort_by(f64::total_cmp);
        v[v.len() / 2]
    };
    let (b, a) = (median(&mut before), median(&mut after));
    assert!(a > b, "median objective {b} before, {a} after");
}

#[test]
fn full_schedule_is_a_restart_baseline() {
    let data = PointSet::new(6, 1, vec![0.0, 1.0, 5.0, 6.0, 20.0, 21.0]).unwrap();
    let problem = KMeans::new(&data, 3).unwrap();
    let h = Hierarchy::new(ReinitSchedule::full(3).unwrap(), Budget::level0_calls(25)).unwrap();
    let t = h.run(&problem, 4).unwrap();
    assert_eq!(t.stats.level0_calls, 25);
    assert_eq!(t.stats.reinits, vec![25]);
    assert_eq!(t.best_cost(), kmeans_bruteforce(&data, 3).unwrap().optimum_cost);
}
