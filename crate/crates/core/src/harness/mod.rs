//! Orchestration behind the `rec-bounds` command line: experiment runs,
//! single bound evaluations, stopping rules, bound curves and the Monte
//! Carlo validation suites.

mod config;
mod curve;
mod run;
mod validate;

pub use config::{
    read_csv, BoundOverrides, DataSpec, ExperimentConfig, LossConfig, SyntheticSpec, WeightedAtom, DEFAULT_DELTA,
};
pub use curve::{cmd_curve, write_curve_csv, CurveRow, CurveSpec, Sweep};
pub use run::{cmd_run, run_experiment, LsSource, RunSummary, StopReport, TruthCheck, CONVERGENCE_TOL};
pub use validate::{cmd_validate, Suite, ValidateOptions, ValidationReport};

use serde::{Deserialize, Serialize};

use crate::bounds::{self, BoundInputs, BoundReport, StopDecision, TheoremId};
use crate::error::{Error, Result};

/// Environment variable capping the worker threads of the validation suites.
pub const THREADS_ENV: &str = "REC_BOUNDS_THREADS";

/// Thread pool sized by [`THREADS_ENV`] when set to a positive integer.
pub fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(raw) = std::env::var(THREADS_ENV) {
        let n: usize = raw
            .trim()
            .parse()
            .ok()
            .filter(|n| *n > 0)
            .ok_or_else(|| Error::Config(format!("{THREADS_ENV}={raw} is not a positive integer")))?;
        builder = builder.num_threads(n);
    }
    builder.build().map_err(|e| Error::Config(e.to_string()))
}

/// Measured risks some theorems need besides [`BoundInputs`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RiskInputs {
    /// `R(P̂_T, θ̂_T)` for the gap bounds.
    pub train_risk: f64,
    /// `R(P̂_0, θ̂_T)` for the data-dependent excess bound.
    pub risk_theta_t: Option<f64>,
    /// `R(P̂_0, θ̂_0)` for the data-dependent excess bound.
    pub risk_theta_0: Option<f64>,
}

pub fn cmd_bound(theorem: TheoremId, inputs: &BoundInputs, risks: &RiskInputs) -> Result<BoundReport> {
    match theorem {
        TheoremId::GenGap => bounds::gen_gap_bound(inputs, risks.train_risk),
        TheoremId::AnytimeGap => bounds::anytime_gap_bound(inputs, risks.train_risk),
        TheoremId::ExcessRisk => bounds::excess_risk_bound(inputs),
        TheoremId::AnytimeExcessRisk => bounds::anytime_excess_risk_bound(inputs),
        TheoremId::DataDependentExcess => {
            let missing = |symbol| Error::MissingSymbol {
                symbol,
                condition: "risk measured on the initial sample",
            };
            let r_t = risks.risk_theta_t.ok_or(missing("risk_theta_t"))?;
            let r_0 = risks.risk_theta_0.ok_or(missing("risk_theta_0"))?;
            bounds::data_dependent_excess_bound(inputs, r_t, r_0)
        }
    }
}

pub fn cmd_stop(epsilon: f64, inputs: &BoundInputs) -> Result<StopDecision> {
    bounds::stopping_rule(epsilon, inputs)
}
