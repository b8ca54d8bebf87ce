use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::bounds::{self, BoundInputs};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sweep {
    /// Vary the horizon `T`.
    T,
    /// Vary the initial sample size `n`.
    N,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveSpec {
    pub sweep: Sweep,
    pub values: Vec<usize>,
    pub deltas: Vec<f64>,
    pub base: BoundInputs,
}

impl CurveSpec {
    /// `from, from + step, …` up to and including `to`.
    pub fn range(sweep: Sweep, from: usize, to: usize, step: usize, deltas: Vec<f64>, base: BoundInputs) -> Result<Self> {
        if step == 0 || from > to {
            return Err(Error::Config(format!("invalid range {from}..={to} step {step}")));
        }
        if sweep == Sweep::N && from == 0 {
            return Err(Error::Config("n sweep must start at 1 or above".into()));
        }
        Ok(Self {
            sweep,
            values: (from..=to).step_by(step).collect(),
            deltas,
            base,
        })
    }
}

/// One point of the anytime gap curve: `total = initial_gap + reciprocal_gap`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub t: usize,
    pub initial_gap: f64,
    pub reciprocal_gap: f64,
    pub total: f64,
    pub delta: f64,
    pub n: usize,
}

/// Anytime gap terms over the sweep, one block per `δ`.
pub fn cmd_curve(spec: &CurveSpec) -> Result<Vec<CurveRow>> {
    let mut rows = Vec::with_capacity(spec.values.len() * spec.deltas.len());
    for &delta in &spec.deltas {
        for &v in &spec.values {
            let mut inputs = spec.base.clone().with_delta(delta);
            match spec.sweep {
                Sweep::T => inputs.horizon = v,
                Sweep::N => inputs.n = v,
            }
            let r = bounds::anytime_gap_bound(&inputs, 0.0)?;
            rows.push(CurveRow {
                t: inputs.horizon,
                initial_gap: r.initial_gap,
                reciprocal_gap: r.reciprocal_gap,
                total: r.gap_terms(),
                delta,
                n: inputs.n,
            });
        }
    }
    Ok(rows)
}

pub fn write_curve_csv<W: Write>(rows: &[CurveRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}
