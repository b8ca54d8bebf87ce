use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::bounds::{self, BoundInputs, BoundReport, StopDecision};
use crate::error::{Error, Result};
use crate::learner::{self, ErmStatus, LossConstants, Model};
use crate::reciprocal::{self, AdaptationMode, Origin, PathStatus, ReciprocalPath};
use crate::transport;

use super::config::{ExperimentConfig, DEFAULT_DELTA};

/// Tolerance on parameter and sample movement for convergence detection.
pub const CONVERGENCE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LsSource {
    Override,
    Theory,
    Empirical,
    /// Larger of the theoretical value and the empirical estimate.
    Max,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "status")]
pub enum StopReport {
    Finite { t_star: f64, t_max: u64 },
    Unbounded,
    BudgetExhausted { epsilon: f64, initial_gap: f64 },
}

/// `W_p(P̂_0, P)` against a synthetic ground truth, next to `β_0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TruthCheck {
    pub w_p: f64,
    pub beta_0: f64,
    pub covered: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub iterations: usize,
    pub horizon: usize,
    pub status: PathStatus,
    pub mode: AdaptationMode,
    pub m: usize,
    pub n_labeled: usize,
    pub n_pool: usize,
    pub pool_remaining: usize,
    pub final_theta: Model,
    pub final_train_risk: f64,
    pub erm_cap_warnings: usize,
    pub convergence_t: Option<usize>,
    pub loss_constants: LossConstants,
    pub l_s: Option<f64>,
    pub l_s_source: Option<LsSource>,
    pub l_s_estimate: Option<f64>,
    pub bound_inputs: BoundInputs,
    pub bounds: Vec<BoundReport>,
    pub stop: Option<StopReport>,
    pub truth: Option<TruthCheck>,
}

#[derive(Serialize)]
struct PathLine<'a> {
    t: usize,
    theta: &'a Model,
    n_t: usize,
    pseudo_labeled: usize,
    step_wasserstein: Option<f64>,
    train_risk: f64,
    erm_iterations: usize,
    erm_status: ErmStatus,
}

#[derive(Serialize)]
struct ReportLine {
    t: usize,
    /// `R(P̂_0, θ̂_t)`.
    risk_on_initial: f64,
    reports: Vec<BoundReport>,
}

/// Runs the experiment described by the config at `config_path` and writes
/// `path.jsonl`, `reports.jsonl` and `summary.json` to its output directory.
pub fn cmd_run(config_path: &Path) -> Result<RunSummary> {
    let cfg = ExperimentConfig::load(config_path)?;
    run_experiment(&cfg)
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunSummary> {
    cfg.validate()?;
    let loss = cfg.loss_spec()?;
    let (labeled, pool) = cfg.load_data()?;
    let (n_labeled, n_pool) = (labeled.len(), pool.len());
    let path = reciprocal::run_reciprocal(labeled, pool, cfg.horizon, &loss, &cfg.adaptation, &cfg.solver)?;

    let constants = loss.constants();
    let l_s_estimate = reciprocal::estimate_ls(&path).ok();
    let (l_s, l_s_source) = match (cfg.bounds.l_s, reciprocal::theoretical_ls(cfg.adaptation.m, n_labeled), l_s_estimate) {
        (Some(v), _, _) => (Some(v), Some(LsSource::Override)),
        (None, Some(t), Some(e)) => (Some(t.max(e)), Some(LsSource::Max)),
        (None, Some(t), None) => (Some(t), Some(LsSource::Theory)),
        (None, None, Some(e)) => (Some(e), Some(LsSource::Empirical)),
        (None, None, None) => (None, None),
    };

    let delta = cfg.bounds.delta.unwrap_or(DEFAULT_DELTA);
    let mut base = cfg.bounds.apply(BoundInputs::from_space(&cfg.space, &constants, n_labeled, delta));
    if cfg.bounds.m.is_none() {
        base.m = cfg.adaptation.m;
    }
    if let Some(v) = l_s {
        base.l_s = v;
    }
    base.validate()?;

    let p0 = &path.initial().sample.dist;
    let risk0 = learner::risk(p0, &path.initial().theta, &loss);
    let mut report_lines = Vec::with_capacity(path.iterations.len());
    for rec in &path.iterations {
        let inputs = base.clone().with_horizon(rec.t);
        let risk_on_initial = learner::risk(p0, &rec.theta, &loss);
        let mut reports = Vec::new();
        if l_s.is_some() || rec.t == 0 {
            reports.push(bounds::anytime_gap_bound(&inputs, rec.train_risk)?);
        }
        if let Ok(r) = bounds::anytime_excess_risk_bound(&inputs) {
            reports.push(r);
        }
        if let Ok(r) = bounds::data_dependent_excess_bound(&inputs, risk_on_initial, risk0) {
            reports.push(r);
        }
        report_lines.push(ReportLine { t: rec.t, risk_on_initial, reports });
    }

    let last = path.last();
    let summary_inputs = base.clone().with_horizon(cfg.bounds.horizon.unwrap_or(path.horizon()));
    let mut summary_bounds = Vec::new();
    if l_s.is_some() {
        if let Ok(r) = bounds::gen_gap_bound(&summary_inputs, last.train_risk) {
            summary_bounds.push(r);
        }
        summary_bounds.push(bounds::anytime_gap_bound(&summary_inputs, last.train_risk)?);
    }
    summary_bounds.extend(bounds::excess_risk_bound(&summary_inputs).ok());
    summary_bounds.extend(bounds::anytime_excess_risk_bound(&summary_inputs).ok());
    let risk_t = learner::risk(p0, &last.theta, &loss);
    summary_bounds.extend(bounds::data_dependent_excess_bound(&summary_inputs, risk_t, risk0).ok());

    let stop = match (cfg.epsilon, l_s) {
        (Some(eps), Some(_)) => Some(match bounds::stopping_rule(eps, &summary_inputs) {
            Ok(StopDecision::Finite { t_star, t_max }) => StopReport::Finite { t_star, t_max },
            Ok(StopDecision::Unbounded) => StopReport::Unbounded,
            Err(Error::BudgetExhausted { epsilon, initial_gap }) => StopReport::BudgetExhausted { epsilon, initial_gap },
            Err(e) => return Err(e),
        }),
        _ => None,
    };

    let truth = match &cfg.data.synthetic {
        Some(syn) => {
            let (w_p, _) = transport::wasserstein(p0, &syn.truth()?, &cfg.space)?;
            let beta_0 = summary_inputs.beta_0()?;
            Some(TruthCheck { w_p, beta_0, covered: w_p <= beta_0 })
        }
        None => None,
    };

    let summary = RunSummary {
        iterations: path.iterations.len(),
        horizon: path.horizon(),
        status: path.status,
        mode: path.mode,
        m: path.m,
        n_labeled,
        n_pool,
        pool_remaining: path.pool_remaining.len(),
        final_theta: last.theta.clone(),
        final_train_risk: last.train_risk,
        erm_cap_warnings: path.iterations.iter().filter(|r| r.erm_status == ErmStatus::MaxIterReached).count(),
        convergence_t: reciprocal::detect_convergence(&path, CONVERGENCE_TOL),
        loss_constants: constants,
        l_s,
        l_s_source,
        l_s_estimate,
        bound_inputs: summary_inputs,
        bounds: summary_bounds,
        stop,
        truth,
    };

    write_outputs(cfg, &path, &report_lines, &summary)?;
    Ok(summary)
}

fn write_jsonl<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    for row in rows {
        serde_json::to_writer(&mut out, &row)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

fn write_outputs(cfg: &ExperimentConfig, path: &ReciprocalPath, reports: &[ReportLine], summary: &RunSummary) -> Result<()> {
    let dir = &cfg.output_dir;
    fs::create_dir_all(dir)?;
    write_jsonl(
        &dir.join("path.jsonl"),
        path.iterations.iter().map(|r| PathLine {
            t: r.t,
            theta: &r.theta,
            n_t: r.sample.len(),
            pseudo_labeled: r.sample.origin.iter().filter(|o| **o != Origin::Labeled).count(),
            step_wasserstein: r.step_wasserstein,
            train_risk: r.train_risk,
            erm_iterations: r.erm_iterations,
            erm_status: r.erm_status,
        }),
    )?;
    write_jsonl(&dir.join("reports.jsonl"), reports)?;
    let mut out = BufWriter::new(File::create(dir.join("summary.json"))?);
    serde_json::to_writer_pretty(&mut out, summary)?;
    out.write_all(b"\n")?;
    out.flush()?;

    if cfg.export_samples {
        let samples = dir.join("samples");
        fs::create_dir_all(&samples)?;
        let d_x = cfg.space.d_x();
        for rec in &path.iterations {
            let mut w = csv::Writer::from_path(samples.join(format!("sample_{}.csv", rec.t)))?;
            let mut header: Vec<String> = (1..=d_x).map(|k| format!("x_{k}")).collect();
            header.extend(["y".into(), "weight".into(), "origin".into()]);
            w.write_record(&header)?;
            for ((z, wt), origin) in rec.sample.dist.iter().zip(&rec.sample.origin) {
                let mut row: Vec<String> = z.x.iter().map(f64::to_string).collect();
                row.push(z.y.to_string());
                row.push(wt.to_string());
                row.push(match origin {
                    Origin::Labeled => "labeled".into(),
                    Origin::Pseudo { step } => format!("pseudo@{step}"),
                });
                w.write_record(&row)?;
            }
            w.flush()?;
        }
    }
    Ok(())
}
