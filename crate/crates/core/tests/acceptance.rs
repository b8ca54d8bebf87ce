//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

use std::fs;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rec_bounds::bounds::{self, BoundInputs, StopDecision, TheoremId};
use rec_bounds::harness::{
    self, cmd_curve, cmd_validate, run_experiment, CurveSpec, DataSpec, ExperimentConfig, LossConfig, RiskInputs,
    Suite, Sweep, SyntheticSpec, ValidateOptions, WeightedAtom,
};
use rec_bounds::learner::{self, LossKind, LossSpec, Model};
use rec_bounds::reciprocal::{AdaptationConfig, ReplacePolicy};
use rec_bounds::space::SpaceSpec;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self { pass, detail: detail.into() }
    }
}

fn worked_example(c_b: f64) -> BoundInputs {
    BoundInputs::new(3, 1.0, 3f64.sqrt(), 10_000, 0.05)
        .with_constants(8.0, c_b)
        .with_l_ell(2f64.sqrt())
        .with_sample(10_000, 1)
        .with_horizon(100)
        .with_ls(9999.0 / 10000.0)
}

fn within(value: f64, target: f64, tol: f64) -> bool {
    (value - target).abs() <= tol
}

fn criterion_1() -> Outcome {
    let r = harness::cmd_bound(TheoremId::AnytimeGap, &worked_example(1.0 / 12.0), &RiskInputs::default()).unwrap();
    Outcome::new(
        within(r.initial_gap, 0.1627, 0.0005),
        format!("initial gap {:.6} (target 0.1627 ± 0.0005)", r.initial_gap),
    )
}

fn criterion_2() -> Outcome {
    let r = harness::cmd_bound(TheoremId::AnytimeGap, &worked_example(1.0 / 12.0), &RiskInputs::default()).unwrap();
    let total = r.gap_terms();
    Outcome::new(
        within(r.reciprocal_gap, 0.0244, 0.0005) && within(total, 0.1871, 0.001),
        format!(
            "reciprocal gap {:.6} (target 0.0244 ± 0.0005), total {:.6} (target 0.1871 ± 0.001)",
            r.reciprocal_gap, total
        ),
    )
}

fn criterion_3() -> Outcome {
    match harness::cmd_stop(0.2, &worked_example(1.0 / 12.0)) {
        Ok(StopDecision::Finite { t_star, t_max }) => Outcome::new(
            within(t_star, 153.46, 0.15) && t_max == 153,
            format!("T* {t_star:.4}, floor {t_max} (target 153.46 ± 0.15, floor 153)"),
        ),
        Ok(StopDecision::Unbounded) => Outcome::new(false, "unbounded (target floor 153)"),
        Err(e) => Outcome::new(false, format!("{e} (target floor 153)")),
    }
}

fn suite(suite: Suite, trials: usize) -> Outcome {
    let opts = ValidateOptions { trials: Some(trials), seed: 0, ..Default::default() };
    let r = cmd_validate(suite, &opts).unwrap();
    Outcome::new(
        r.passed && r.violations == 0,
        format!("{} checks, {} violations, worst slack {:.3e}", r.trials, r.violations, r.worst_slack),
    )
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for i in 0..500 {
        let d_x = 2 + i % 3;
        let space = SpaceSpec::unit_cube(d_x, 5.0, 1.0).unwrap();
        let spec = if i % 2 == 0 {
            LossSpec::logistic(space)
        } else {
            LossSpec::ridge_logistic(space, rng.gen_range(0.01..1.0)).unwrap()
        };
        let x: Vec<f64> = (0..d_x).map(|_| rng.gen_range(0.0..1.0)).collect();
        let y: f64 = rng.gen_range(0.0..1.0);
        let theta: Vec<f64> = (0..d_x).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let g = learner::loss_gradient(y, &x, &Model::new(theta.clone()), &spec);
        let mut err2 = 0.0;
        let mut norm2 = 0.0;
        for k in 0..d_x {
            let mut hi = theta.clone();
            let mut lo = theta.clone();
            hi[k] += h;
            lo[k] -= h;
            let fd = (learner::loss(y, &x, &Model::new(hi), &spec) - learner::loss(y, &x, &Model::new(lo), &spec))
                / (2.0 * h);
            err2 += (g[k] - fd).powi(2);
            norm2 += g[k] * g[k];
        }
        worst = worst.max(err2.sqrt() / norm2.sqrt().max(1e-6));
    }
    Outcome::new(worst <= 1e-5, format!("500 triples, worst relative error {worst:.3e}"))
}

fn criterion_8() -> Outcome {
    let mut failures = Vec::new();
    let mut check = |ok: bool, what: &str| {
        if !ok {
            failures.push(what.to_string());
        }
    };

    let beta = |l_s: f64, t: usize, n: usize| bounds::distortion_bound(l_s, t, 1, n, 1.0, 3f64.sqrt());
    check((0..500).all(|t| beta(0.99, t + 1, 100) >= beta(0.99, t, 100)), "beta_T monotone in T");
    check(
        (1..100).all(|i| beta(i as f64 / 100.0, 50, 100) >= beta((i - 1) as f64 / 100.0, 50, 100)),
        "beta_T monotone in L_s",
    );
    check((1..500).all(|n| beta(0.9, 50, n + 1) <= beta(0.9, 50, n)), "beta_T antitone in n");

    let base = worked_example(1.0 / 3.0).with_ls(0.9);
    let limit = bounds::gen_gap_bound(&base, 0.0).unwrap();
    let far = bounds::anytime_gap_bound(&base.clone().with_horizon(100_000), 0.0).unwrap();
    check(
        (far.initial_gap - limit.initial_gap).abs() <= 1e-10
            && (far.reciprocal_gap - limit.reciprocal_gap).abs() <= 1e-10
            && (far.total - limit.total).abs() <= 1e-10,
        "anytime gap at large T equals the convergent gap",
    );

    for eps in [0.2, 0.25, 0.5] {
        let inputs = worked_example(1.0 / 3.0);
        match bounds::stopping_rule(eps, &inputs) {
            Ok(StopDecision::Finite { t_max, .. }) => {
                let gap = |t: u64| bounds::anytime_gap_bound(&inputs.clone().with_horizon(t as usize), 0.0).unwrap().gap_terms();
                check(gap(t_max) <= eps && gap(t_max + 1) > eps, "stopping rule inversion at T and T+1");
            }
            _ => check(false, "stopping rule finite"),
        }
    }

    let space = SpaceSpec::unit_cube(2, 10.0, 1.0).unwrap();
    let constants = LossSpec::ridge_logistic(space.clone(), 2.0).unwrap().constants();
    let mut excess = BoundInputs::from_space(&space, &constants, 1000, 0.05).with_ls(0.5);
    excess.l_a = Some(0.8);
    let ratio = excess.l_s * excess.kappa / excess.gamma.unwrap();
    check(ratio < 1.0, "contraction ratio below 1 in the excess fixture");
    let conv = bounds::excess_risk_bound(&excess).unwrap();
    let any = bounds::anytime_excess_risk_bound(&excess.clone().with_horizon(100_000)).unwrap();
    check((any.reciprocal_gap - conv.reciprocal_gap).abs() <= 1e-10, "anytime excess middle term limit");

    let curve_base = worked_example(1.0 / 12.0);
    let t_rows = cmd_curve(&CurveSpec::range(Sweep::T, 0, 1000, 10, vec![0.05, 0.1], curve_base.clone()).unwrap()).unwrap();
    let (d05, d10) = t_rows.split_at(t_rows.len() / 2);
    check(d05.windows(2).all(|w| w[1].total > w[0].total), "curve increasing in T");
    check(d05.iter().zip(d10).all(|(a, b)| a.total > b.total), "curve larger at delta 0.05");
    let n_rows =
        cmd_curve(&CurveSpec::range(Sweep::N, 1000, 50_000, 1000, vec![0.05], curve_base).unwrap()).unwrap();
    check(n_rows.windows(2).all(|w| w[1].total < w[0].total), "curve decreasing in n");

    if failures.is_empty() {
        Outcome::new(true, "monotonicity, limits, stopping inversion and curve shape hold")
    } else {
        Outcome::new(false, failures.join("; "))
    }
}

fn determinism_config(output_dir: std::path::PathBuf) -> ExperimentConfig {
    let space = SpaceSpec::unit_cube(2, 10.0, 1.0).unwrap();
    let atom = |weight, y, x: [f64; 2]| WeightedAtom { weight, y, x: x.to_vec() };
    ExperimentConfig {
        space,
        loss: LossConfig { kind: LossKind::RidgeLogistic, ridge_lambda: 0.1 },
        adaptation: AdaptationConfig::nongreedy(2, 0.2, ReplacePolicy::RandomSeeded, 99),
        horizon: 12,
        solver: Default::default(),
        bounds: Default::default(),
        data: DataSpec {
            labeled: None,
            pool: None,
            synthetic: Some(SyntheticSpec {
                n_labeled: 25,
                n_pool: 30,
                generator_seed: 5,
                true_distribution: vec![
                    atom(0.4, 1.0, [0.8, 0.9]),
                    atom(0.1, 0.0, [0.6, 0.7]),
                    atom(0.35, 0.0, [0.1, 0.3]),
                    atom(0.15, 1.0, [0.3, 0.2]),
                ],
            }),
        },
        epsilon: Some(1.0),
        export_samples: false,
        output_dir,
    }
}

fn criterion_9() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    run_experiment(&determinism_config(a.clone())).unwrap();
    run_experiment(&determinism_config(b.clone())).unwrap();
    let same = ["path.jsonl", "reports.jsonl"]
        .iter()
        .all(|f| fs::read(a.join(f)).unwrap() == fs::read(b.join(f)).unwrap());
    Outcome::new(same, "two runs of one config produce identical path.jsonl and reports.jsonl")
}

type Criterion = (&'static str, Duration, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: Vec<Criterion> = vec![
        ("1 initial gap of the logistic example", Duration::from_secs(1), criterion_1),
        ("2 reciprocal gap and total of the logistic example", Duration::from_secs(1), criterion_2),
        ("3 stopping rule of the logistic example", Duration::from_secs(1), criterion_3),
        ("4 transport solver vs permutation oracle", Duration::from_secs(120), || suite(Suite::OracleOt, 200)),
        ("5 distortion bound on simulated paths", Duration::from_secs(600), || suite(Suite::Distortion, 100)),
        ("6 concentration radius coverage", Duration::from_secs(900), || suite(Suite::Concentration, 1000)),
        ("7 loss gradient vs finite differences", Duration::from_secs(5), criterion_7),
        ("8 bound structure properties", Duration::from_secs(10), criterion_8),
        ("9 run determinism", Duration::from_secs(60), criterion_9),
    ];
    let mut failed = 0;
    for (name, budget, run) in criteria {
        let start = Instant::now();
        let out = run();
        let elapsed = start.elapsed();
        let pass = out.pass && elapsed <= budget;
        failed += usize::from(!pass);
        println!(
            "{} criterion {name}: {} [{:.3}s, budget {}s]",
            if pass { "PASS" } else { "FAIL" },
            out.detail,
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
    }

    let alt = harness::cmd_bound(TheoremId::AnytimeGap, &worked_example(1.0 / 3.0), &RiskInputs::default()).unwrap();
    let stop = harness::cmd_stop(0.2, &worked_example(1.0 / 3.0)).unwrap();
    println!(
        "INFO with C_b = 1/3: initial gap {:.6}, reciprocal gap {:.6}, total {:.6}, stop {:?}",
        alt.initial_gap,
        alt.reciprocal_gap,
        alt.gap_terms(),
        stop
    );

    if failed == 0 {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} criteria failed");
        ExitCode::FAILURE
    }
}
