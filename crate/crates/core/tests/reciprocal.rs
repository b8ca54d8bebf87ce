use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rec_bounds::bounds::geometric_sum;
use rec_bounds::learner::{self, LossSpec};
use rec_bounds::reciprocal::{
    detect_convergence, estimate_ls, run_reciprocal, step_cap, AdaptationConfig, AdaptationMode, PathStatus,
    ReplacePolicy, RunSettings,
};
use rec_bounds::space::{Instance, SpaceSpec};
use rec_bounds::transport::wasserstein;

const TOL: f64 = 1e-9;

fn space() -> SpaceSpec {
    SpaceSpec::unit_cube(2, 10.0, 1.0).unwrap()
}

fn data(seed: u64, n_labeled: usize, n_pool: usize) -> (Vec<Instance>, Vec<Instance>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut point = |labeled: bool| {
        let x = vec![rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)];
        let y = if labeled { f64::from(x[0] + x[1] + rng.gen_range(-0.3..0.3) > 1.0) } else { 0.0 };
        Instance::new(y, x)
    };
    let labeled = (0..n_labeled).map(|_| point(true)).collect();
    let pool = (0..n_pool).map(|_| point(false)).collect();
    (labeled, pool)
}

fn loss() -> LossSpec {
    LossSpec::ridge_logistic(space(), 0.1).unwrap()
}

#[test]
fn nongreedy_steps_respect_the_movement_cap() {
    let (labeled, pool) = data(1, 20, 30);
    let adapt = AdaptationConfig::nongreedy(1, 0.1, ReplacePolicy::OldestPseudo, 5);
    let path = run_reciprocal(labeled, pool, 15, &loss(), &adapt, &RunSettings::default()).unwrap();
    assert_eq!(path.horizon(), 15);
    let cap = step_cap(1, 20, 1.0, space().diameter_z());
    for rec in &path.iterations[1..] {
        let s = rec.step_wasserstein.unwrap();
        assert!(s <= cap + TOL, "t={} step {s} > cap {cap}", rec.t);
        assert_eq!(rec.sample.len(), 20);
    }
}

#[test]
fn step_distances_agree_with_an_independent_solve() {
    let (labeled, pool) = data(2, 12, 20);
    let adapt = AdaptationConfig::greedy(2, 0.0, 0);
    let path = run_reciprocal(labeled, pool, 6, &loss(), &adapt, &RunSettings::default()).unwrap();
    for w in path.iterations.windows(2) {
        let (direct, _) = wasserstein(&w[0].sample.dist, &w[1].sample.dist, &space()).unwrap();
        assert!((direct - w[1].step_wasserstein.unwrap()).abs() <= TOL);
    }
}

#[test]
fn zero_horizon_is_one_shot_erm() {
    let (labeled, pool) = data(3, 15, 10);
    let adapt = AdaptationConfig::greedy(1, 0.5, 1);
    let path = run_reciprocal(labeled.clone(), pool, 0, &loss(), &adapt, &RunSettings::default()).unwrap();
    assert_eq!(path.iterations.len(), 1);
    assert_eq!(path.status, PathStatus::Completed);
    let dist = rec_bounds::space::EmpiricalDistribution::uniform(labeled).unwrap();
    let fit = learner::erm(&dist, &loss(), learner::DEFAULT_TOL, learner::DEFAULT_MAX_ITER).unwrap();
    assert_eq!(path.initial().theta, fit.model);
    assert!(path.initial().step_wasserstein.is_none());
}

#[test]
fn greedy_stops_when_the_pool_runs_out() {
    let (labeled, pool) = data(4, 8, 3);
    let adapt = AdaptationConfig::greedy(1, 0.0, 0);
    let path = run_reciprocal(labeled, pool, 10, &loss(), &adapt, &RunSettings::default()).unwrap();
    assert_eq!(path.horizon(), 3);
    assert_eq!(path.status, PathStatus::PoolExhausted { horizon: 3 });
    assert!(path.pool_remaining.is_empty());
}

#[test]
fn identical_atoms_converge_at_a_stable_index() {
    let x = vec![0.5, 0.5];
    let labeled: Vec<Instance> = (0..10).map(|i| Instance::new(f64::from(i % 3 == 0), x.clone())).collect();
    let pool: Vec<Instance> = (0..40).map(|_| Instance::new(0.0, x.clone())).collect();
    let adapt = AdaptationConfig::nongreedy(1, 0.0, ReplacePolicy::OldestPseudo, 9);
    let settings = RunSettings { erm_tol: 1e-12, ..RunSettings::default() };
    let run = || run_reciprocal(labeled.clone(), pool.clone(), 30, &loss(), &adapt, &settings).unwrap();
    let (a, b) = (run(), run());
    let t = detect_convergence(&a, 1e-8).expect("converges");
    assert!(t < 30);
    assert_eq!(detect_convergence(&b, 1e-8), Some(t));
}

fn path_case() -> impl Strategy<Value = (u64, AdaptationMode, usize, usize, usize)> {
    (
        any::<u64>(),
        prop::sample::select(vec![AdaptationMode::GreedyAdd, AdaptationMode::NongreedyReplace]),
        1usize..=2,
        6usize..=25,
        3usize..=10,
    )
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn paths_obey_size_cap_triangle_and_plugin_distortion((seed, mode, m, n, horizon) in path_case()) {
        let (labeled, pool) = data(seed, n, horizon * m + 5);
        let adapt = match mode {
            AdaptationMode::GreedyAdd => AdaptationConfig::greedy(m, 0.2, seed),
            AdaptationMode::NongreedyReplace => AdaptationConfig::nongreedy(m, 0.2, ReplacePolicy::RandomSeeded, seed),
        };
        let path = run_reciprocal(labeled, pool, horizon, &loss(), &adapt, &RunSettings::default()).unwrap();
        let s = space();
        let p0 = &path.initial().sample.dist;
        let mut sum_steps = 0.0;
        for (t, rec) in path.iterations.iter().enumerate() {
            let expected = match mode {
                AdaptationMode::GreedyAdd => n + t * m,
                AdaptationMode::NongreedyReplace => n,
            };
            prop_assert_eq!(rec.sample.len(), expected);
            prop_assert!(s.theta_in_box(&rec.theta.theta));
            if t == 0 {
                continue;
            }
            let step = rec.step_wasserstein.unwrap();
            let prev_n = path.iterations[t - 1].sample.len();
            prop_assert!(step <= step_cap(m, prev_n, 1.0, s.diameter_z()) + TOL);
            sum_steps += step;
            let (w0t, _) = wasserstein(p0, &rec.sample.dist, &s).unwrap();
            prop_assert!(w0t <= sum_steps + TOL);
        }
        if let Ok(l_hat) = estimate_ls(&path) {
            let steps = path.step_distances().unwrap();
            let (w0t, _) = wasserstein(p0, &path.last().sample.dist, &s).unwrap();
            prop_assert!(w0t <= geometric_sum(l_hat, path.horizon()) * steps[0] + TOL);
        }
    }

    #[test]
    fn same_seed_same_path(seed in any::<u64>()) {
        let (labeled, pool) = data(seed, 10, 12);
        let adapt = AdaptationConfig::nongreedy(1, 1.0, ReplacePolicy::RandomSeeded, seed);
        let run = || run_reciprocal(labeled.clone(), pool.clone(), 5, &loss(), &adapt, &RunSettings::default()).unwrap();
        prop_assert_eq!(run(), run());
    }
}
