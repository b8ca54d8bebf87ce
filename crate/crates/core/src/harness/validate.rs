use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::bounds::{self, BoundInputs, StopDecision};
use crate::error::{Error, Result};
use crate::learner::{self, LossSpec};
use crate::reciprocal::{self, step_seed, AdaptationConfig, AdaptationMode, ReplacePolicy, RunSettings};
use crate::space::{EmpiricalDistribution, Instance, SpaceSpec};
use crate::transport;

/// Absolute slack tolerated on floating-point comparisons against bounds.
const CHECK_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    /// Distortion bound check on simulated self-training paths.
    Distortion,
    /// Coverage of the concentration radius against a discrete truth.
    Concentration,
    /// Exact solver against the permutation oracle.
    OracleOt,
    /// The worked logistic example's published numbers.
    PaperReplication,
}

impl Suite {
    pub fn default_trials(self) -> usize {
        match self {
            Suite::Distortion => 100,
            Suite::Concentration => 1000,
            Suite::OracleOt => 200,
            Suite::PaperReplication => 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidateOptions {
    /// Trials per suite; `None` uses [`Suite::default_trials`].
    pub trials: Option<usize>,
    pub seed: u64,
    /// Directory for the per-trial JSON-lines details.
    pub out_dir: Option<PathBuf>,
    /// Sample sizes of the concentration suite.
    pub concentration_ns: Vec<usize>,
    /// Confidence levels of the concentration suite.
    pub concentration_deltas: Vec<f64>,
}

impl Default for ValidateOptions {
    fn default() -> Self {
        Self {
            trials: None,
            seed: 0,
            out_dir: None,
            concentration_ns: vec![50, 200],
            concentration_deltas: vec![0.05, 0.1],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub suite: Suite,
    /// Number of checked units: solver pairs, simulated paths, sampled
    /// (n, δ) coverage events, or published targets.
    pub trials: usize,
    pub violations: usize,
    /// Smallest margin between bound and measurement; for concentration the
    /// smallest `coverage − (1 − δ)` over groups.
    pub worst_slack: f64,
    pub passed: bool,
    pub details_path: Option<PathBuf>,
    pub worst_case: Option<Value>,
}

struct Outcome {
    trials: usize,
    violations: usize,
    worst_slack: f64,
    passed: bool,
    details: Vec<Value>,
    worst_case: Option<Value>,
}

impl Outcome {
    /// Folds per-trial `(violated, slack, detail)` triples.
    fn from_trials(rows: Vec<(bool, f64, Value)>) -> Self {
        let trials = rows.len();
        let violations = rows.iter().filter(|r| r.0).count();
        let worst = rows
            .iter()
            .enumerate()
            .min_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
            .map(|(i, _)| i);
        let worst_slack = worst.map_or(f64::INFINITY, |i| rows[i].1);
        let worst_case = worst.map(|i| rows[i].2.clone());
        Self {
            trials,
            violations,
            worst_slack,
            passed: violations == 0,
            details: rows.into_iter().map(|r| r.2).collect(),
            worst_case,
        }
    }
}

pub fn cmd_validate(suite: Suite, opts: &ValidateOptions) -> Result<ValidationReport> {
    let trials = opts.trials.unwrap_or(suite.default_trials());
    let pool = super::thread_pool()?;
    let outcome = pool.install(|| match suite {
        Suite::OracleOt => oracle_ot(trials, opts.seed),
        Suite::Distortion => distortion(trials, opts.seed),
        Suite::Concentration => concentration(trials, opts),
        Suite::PaperReplication => paper_replication(),
    })?;

    let details_path = match &opts.out_dir {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            let path = dir.join(format!("{}_details.jsonl", suite_name(suite)));
            let mut out = BufWriter::new(File::create(&path)?);
            for row in &outcome.details {
                serde_json::to_writer(&mut out, row)?;
                out.write_all(b"\n")?;
            }
            out.flush()?;
            Some(path)
        }
        None => None,
    };
    Ok(ValidationReport {
        suite,
        trials: outcome.trials,
        violations: outcome.violations,
        worst_slack: outcome.worst_slack,
        passed: outcome.passed,
        details_path,
        worst_case: if outcome.passed { None } else { outcome.worst_case },
    })
}

fn suite_name(suite: Suite) -> &'static str {
    match suite {
        Suite::Distortion => "distortion",
        Suite::Concentration => "concentration",
        Suite::OracleOt => "oracle_ot",
        Suite::PaperReplication => "paper_replication",
    }
}

fn random_instance(rng: &mut ChaCha8Rng, d_x: usize) -> Instance {
    Instance::new(rng.gen(), (0..d_x).map(|_| rng.gen()).collect())
}

fn oracle_ot(trials: usize, seed: u64) -> Result<Outcome> {
    let space = SpaceSpec::unit_cube(2, 1.0, 1.0)?;
    let rows = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(step_seed(seed, i));
            let n = 2 + i % 5;
            let order = if (i / 5) % 2 == 0 { 1.0 } else { 2.0 };
            let p = EmpiricalDistribution::uniform((0..n).map(|_| random_instance(&mut rng, 2)).collect())?;
            let q = EmpiricalDistribution::uniform((0..n).map(|_| random_instance(&mut rng, 2)).collect())?;
            let (lp, _) = transport::wasserstein_order(&p, &q, &space, order)?;
            let bf = transport::wasserstein_bruteforce_order(&p, &q, &space, order)?;
            let diff = (lp - bf).abs();
            let detail = json!({"trial": i, "n": n, "p": order, "lp": lp, "bruteforce": bf, "abs_diff": diff});
            Ok((diff > CHECK_TOL, CHECK_TOL - diff, detail))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Outcome::from_trials(rows))
}

const DISTORTION_KINDS: [(AdaptationMode, usize); 3] = [
    (AdaptationMode::GreedyAdd, 1),
    (AdaptationMode::NongreedyReplace, 1),
    (AdaptationMode::NongreedyReplace, 2),
];

fn distortion(trials: usize, seed: u64) -> Result<Outcome> {
    let rows = (0..trials)
        .into_par_iter()
        .map(|i| distortion_trial(i, seed))
        .collect::<Result<Vec<_>>>()?;
    Ok(Outcome::from_trials(rows))
}

fn distortion_trial(i: usize, seed: u64) -> Result<(bool, f64, Value)> {
    let mut rng = ChaCha8Rng::seed_from_u64(step_seed(seed, i));
    let (mode, m) = DISTORTION_KINDS[i % DISTORTION_KINDS.len()];
    let (d_x, order) = if (i / DISTORTION_KINDS.len()).is_multiple_of(2) { (2, 1.0) } else { (4, 2.0) };
    let space = SpaceSpec::unit_cube(d_x, 50.0, order)?;
    let loss = LossSpec::ridge_logistic(space.clone(), 0.05)?;

    let n: usize = rng.gen_range(10..=60);
    let horizon: usize = rng.gen_range(5..=20);
    let n_pool = horizon * m + rng.gen_range(0..10);
    let w_star: Vec<f64> = (0..d_x).map(|_| rng.gen_range(-4.0..4.0)).collect();
    let draw = |labeled: bool, rng: &mut ChaCha8Rng| {
        let x: Vec<f64> = (0..d_x).map(|_| rng.gen()).collect();
        let margin: f64 = w_star.iter().zip(&x).map(|(w, v)| w * (v - 0.5)).sum();
        let y = if labeled && rng.gen::<f64>() < learner::sigmoid(margin) { 1.0 } else { 0.0 };
        Instance::new(y, x)
    };
    let labeled: Vec<Instance> = (0..n).map(|_| draw(true, &mut rng)).collect();
    let pool: Vec<Instance> = (0..n_pool).map(|_| draw(false, &mut rng)).collect();
    let temperature = [0.0, 0.1, 0.5, 1.0][rng.gen_range(0..4)];
    let adapt = AdaptationConfig {
        mode,
        m,
        selection_temperature: temperature,
        replace_policy: ReplacePolicy::OldestPseudo,
        seed: rng.gen(),
    };
    let path = reciprocal::run_reciprocal(labeled, pool, horizon, &loss, &adapt, &RunSettings::default())?;

    let steps = path.step_distances().expect("tracked");
    let estimate = reciprocal::estimate_ls_from_steps(&steps).ok();
    let theory = (mode == AdaptationMode::GreedyAdd).then(|| reciprocal::theoretical_ls(m, n)).flatten();
    let fallback = steps
        .windows(2)
        .filter(|w| w[0] > 0.0)
        .map(|w| w[1] / w[0])
        .fold(0.0, f64::max);
    let l_s = match (estimate, theory) {
        (Some(e), Some(t)) => e.max(t),
        (Some(e), None) => e,
        (None, Some(t)) => t,
        (None, None) => fallback,
    };

    let d_z = space.diameter_z();
    let p0 = &path.initial().sample.dist;
    let mut worst = f64::INFINITY;
    let mut failures = 0usize;
    for rec in &path.iterations[1..] {
        let (w, _) = transport::wasserstein(p0, &rec.sample.dist, &space)?;
        let bound = bounds::distortion_bound(l_s, rec.t, m, n, order, d_z);
        let prev_n = path.iterations[rec.t - 1].sample.len();
        let cap = reciprocal::step_cap(m, prev_n, order, d_z);
        let step_slack = cap - steps[rec.t - 1];
        let slack = (bound - w).min(step_slack);
        if slack < -CHECK_TOL {
            failures += 1;
        }
        worst = worst.min(slack);
    }
    let detail = json!({
        "trial": i,
        "mode": mode,
        "m": m,
        "n": n,
        "p": order,
        "T": path.horizon(),
        "temperature": temperature,
        "l_s": l_s,
        "l_s_estimate": estimate,
        "l_s_theory": theory,
        "failed_checks": failures,
        "worst_slack": worst,
    });
    Ok((failures > 0, worst, detail))
}

/// Fixed eight-atom ground truth on the unit square.
fn concentration_truth(seed: u64) -> Result<EmpiricalDistribution> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let atoms = (0..8)
        .map(|_| {
            let x = vec![rng.gen(), rng.gen()];
            Instance::new(if rng.gen::<bool>() { 1.0 } else { 0.0 }, x)
        })
        .collect();
    let masses = (0..8).map(|_| rng.gen_range(0.2..1.0)).collect();
    EmpiricalDistribution::normalized(atoms, masses)
}

fn concentration(trials: usize, opts: &ValidateOptions) -> Result<Outcome> {
    let space = SpaceSpec::unit_cube(2, 1.0, 1.0)?;
    let truth = concentration_truth(opts.seed)?;
    let index = WeightedIndex::new(truth.weights()).map_err(|e| Error::InvalidWeights(e.to_string()))?;
    let ns = &opts.concentration_ns;
    let deltas = &opts.concentration_deltas;

    // w[k][i]: W_p(P̂_0, P) for sample size ns[k] in trial i.
    let mut w = Vec::with_capacity(ns.len());
    for (k, &n) in ns.iter().enumerate() {
        let row = (0..trials)
            .into_par_iter()
            .map(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(step_seed(opts.seed, k * trials + i));
                let mut counts = vec![0usize; truth.len()];
                for _ in 0..n {
                    counts[index.sample(&mut rng)] += 1;
                }
                let (atoms, masses): (Vec<Instance>, Vec<f64>) = truth
                    .points()
                    .iter()
                    .zip(&counts)
                    .filter(|(_, c)| **c > 0)
                    .map(|(z, c)| (z.clone(), *c as f64))
                    .unzip();
                let sample = EmpiricalDistribution::normalized(atoms, masses)?;
                Ok(transport::wasserstein(&sample, &truth, &space)?.0)
            })
            .collect::<Result<Vec<f64>>>()?;
        w.push(row);
    }

    let mut details = Vec::new();
    let mut violations = 0;
    let mut worst_slack = f64::INFINITY;
    let mut worst_case = None;
    let mut passed = true;
    for (k, &n) in ns.iter().enumerate() {
        for &delta in deltas {
            let inputs = BoundInputs::new(space.d(), space.p(), space.diameter_z(), n, delta);
            let beta_0 = inputs.beta_0()?;
            let misses = w[k].iter().filter(|v| **v > beta_0).count();
            let coverage = 1.0 - misses as f64 / trials.max(1) as f64;
            let slack = coverage - (1.0 - delta);
            let group = json!({
                "n": n,
                "delta": delta,
                "beta_0": beta_0,
                "coverage": coverage,
                "misses": misses,
                "max_w_p": w[k].iter().cloned().fold(0.0, f64::max),
            });
            violations += misses;
            passed &= slack >= 0.0;
            if slack < worst_slack {
                worst_slack = slack;
                worst_case = Some(group.clone());
            }
            details.push(group);
        }
    }
    for (k, &n) in ns.iter().enumerate() {
        details.extend(w[k].iter().enumerate().map(|(i, v)| json!({"trial": i, "n": n, "w_p": v})));
    }
    Ok(Outcome {
        trials: trials * ns.len() * deltas.len(),
        violations,
        worst_slack,
        passed,
        details,
        worst_case,
    })
}

/// Published values of the worked example and their tolerances.
pub(crate) const WORKED_INITIAL_GAP: (f64, f64) = (0.1627, 0.0005);
pub(crate) const WORKED_RECIPROCAL_GAP: (f64, f64) = (0.0244, 0.0005);
pub(crate) const WORKED_TOTAL: (f64, f64) = (0.1871, 0.001);
pub(crate) const WORKED_T_STAR: (f64, f64) = (153.46, 0.15);
pub(crate) const WORKED_T_MAX: u64 = 153;
pub(crate) const WORKED_EPSILON: f64 = 0.2;

/// Inputs of the worked example: unit-cube features in two dimensions,
/// `Θ = [−100, 100]²`, `p = 1`, `n = 10⁴`, `δ = 0.05`, `T = 100`, one
/// pseudo-labeled point per iteration and `L_s = (n − 1)/n`.
pub fn worked_example_inputs() -> Result<BoundInputs> {
    let space = SpaceSpec::unit_cube(2, 100.0, 1.0)?;
    let constants = LossSpec::logistic(space.clone()).constants();
    let n = 10_000;
    let l_s = reciprocal::theoretical_ls(1, n).expect("m = 1");
    Ok(BoundInputs::from_space(&space, &constants, n, 0.05).with_horizon(100).with_ls(l_s))
}

fn paper_replication() -> Result<Outcome> {
    let inputs = worked_example_inputs()?;
    let report = bounds::anytime_gap_bound(&inputs, 0.0)?;
    let check = |name: &str, value: f64, (target, tol): (f64, f64)| {
        let slack = tol - (value - target).abs();
        (slack < 0.0, slack, json!({"target": name, "value": value, "expected": target, "tolerance": tol}))
    };
    let mut rows = vec![
        check("initial_gap", report.initial_gap, WORKED_INITIAL_GAP),
        check("reciprocal_gap", report.reciprocal_gap, WORKED_RECIPROCAL_GAP),
        check("total", report.gap_terms(), WORKED_TOTAL),
    ];
    rows.push(match bounds::stopping_rule(WORKED_EPSILON, &inputs) {
        Ok(StopDecision::Finite { t_star, t_max }) => {
            let slack = WORKED_T_STAR.1 - (t_star - WORKED_T_STAR.0).abs();
            let ok = t_max == WORKED_T_MAX && slack >= 0.0;
            let slack = if t_max == WORKED_T_MAX { slack } else { -((t_max as f64 - WORKED_T_MAX as f64).abs()) };
            (!ok, slack, json!({"target": "stopping_rule", "t_star": t_star, "t_max": t_max, "expected": WORKED_T_MAX}))
        }
        Ok(StopDecision::Unbounded) => (true, f64::NEG_INFINITY, json!({"target": "stopping_rule", "status": "unbounded", "expected": WORKED_T_MAX})),
        Err(Error::BudgetExhausted { epsilon, initial_gap }) => (
            true,
            epsilon - initial_gap,
            json!({"target": "stopping_rule", "status": "budget_exhausted", "epsilon": epsilon, "initial_gap": initial_gap, "expected": WORKED_T_MAX}),
        ),
        Err(e) => return Err(e),
    });
    Ok(Outcome::from_trials(rows))
}
