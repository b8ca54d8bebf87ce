//! Exact Wasserstein-p distances between empirical distributions.
//!
//! [`wasserstein`] solves the discrete transportation LP exactly with a
//! transportation simplex; [`wasserstein_bruteforce`] enumerates all
//! permutations for small equal-size uniform inputs and serves as an
//! independent oracle.

mod simplex;

use std::io::Write;

use itertools::Itertools;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::space::{raw_distance, EmpiricalDistribution, SpaceSpec};

/// Largest support size the permutation oracle accepts.
pub const BRUTEFORCE_MAX: usize = 8;

/// Optimal transport plan between two empirical distributions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Coupling {
    /// `mass[i][j]`: mass moved from point `i` of P to point `j` of Q.
    pub mass: Vec<Vec<f64>>,
    /// Achieved cost `Σ mass[i][j] · d(z_i, z'_j)^p`.
    pub cost: f64,
}

impl Coupling {
    pub fn row_sums(&self) -> Vec<f64> {
        self.mass.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let cols = self.mass.first().map_or(0, Vec::len);
        (0..cols)
            .map(|j| self.mass.iter().map(|r| r[j]).sum())
            .collect()
    }

    /// Writes the mass matrix as CSV with header `i,j,mass` (nonzero cells only).
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["i", "j", "mass"])?;
        for (i, row) in self.mass.iter().enumerate() {
            for (j, &m) in row.iter().enumerate() {
                if m > 0.0 {
                    w.write_record([i.to_string(), j.to_string(), m.to_string()])?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }
}

fn check_pair(p: &EmpiricalDistribution, q: &EmpiricalDistribution, space: &SpaceSpec) -> Result<()> {
    for dist in [p, q] {
        if dist.dim() != space.d_x() {
            return Err(Error::DimensionMismatch {
                expected: space.d_x(),
                found: dist.dim(),
            });
        }
        dist.check_space(space)?;
    }
    Ok(())
}

/// Row-major matrix of `d(z_i, z'_j)^p`.
pub fn cost_matrix(p: &EmpiricalDistribution, q: &EmpiricalDistribution, order: f64) -> Vec<f64> {
    let mut cost = Vec::with_capacity(p.len() * q.len());
    for a in p.points() {
        for b in q.points() {
            let d = raw_distance(a, b);
            cost.push(if order == 1.0 { d } else { d.powf(order) });
        }
    }
    cost
}

/// `W_p(P, Q)` with `p` taken from the space, and an optimal coupling.
pub fn wasserstein(
    p: &EmpiricalDistribution,
    q: &EmpiricalDistribution,
    space: &SpaceSpec,
) -> Result<(f64, Coupling)> {
    wasserstein_order(p, q, space, space.p())
}

/// Same as [`wasserstein`] with an explicit order `p ≥ 1`.
pub fn wasserstein_order(
    p: &EmpiricalDistribution,
    q: &EmpiricalDistribution,
    space: &SpaceSpec,
    order: f64,
) -> Result<(f64, Coupling)> {
    check_pair(p, q, space)?;
    if !(order >= 1.0 && order.is_finite()) {
        return Err(Error::InvalidSpace(format!("Wasserstein order {order} must be ≥ 1")));
    }
    let cost = cost_matrix(p, q, order);
    let sol = simplex::solve(p.weights(), q.weights(), &cost)?;
    let total: f64 = sol.flow.iter().zip(&cost).map(|(f, c)| f * c).sum();
    let mass = sol.flow.chunks(q.len()).map(<[f64]>::to_vec).collect();
    let total = total.max(0.0);
    Ok((total.powf(1.0 / order), Coupling { mass, cost: total }))
}

/// Exhaustive minimum over all `n!` matchings of two uniform distributions
/// of equal size `n ≤ 8`.
pub fn wasserstein_bruteforce(
    p: &EmpiricalDistribution,
    q: &EmpiricalDistribution,
    space: &SpaceSpec,
) -> Result<f64> {
    wasserstein_bruteforce_order(p, q, space, space.p())
}

pub fn wasserstein_bruteforce_order(
    p: &EmpiricalDistribution,
    q: &EmpiricalDistribution,
    space: &SpaceSpec,
    order: f64,
) -> Result<f64> {
    check_pair(p, q, space)?;
    let n = p.len();
    if q.len() != n {
        return Err(Error::OracleScope(format!("sizes differ ({n} vs {})", q.len())));
    }
    if n > BRUTEFORCE_MAX {
        return Err(Error::OracleScope(format!("n = {n} exceeds {BRUTEFORCE_MAX}")));
    }
    if !(p.is_uniform() && q.is_uniform()) {
        return Err(Error::OracleScope("weights must be uniform".into()));
    }
    let d: Vec<Vec<f64>> = p
        .points()
        .iter()
        .map(|a| q.points().iter().map(|b| raw_distance(a, b).powf(order)).collect())
        .collect();
    let best = (0..n)
        .permutations(n)
        .map(|perm| perm.iter().enumerate().map(|(i, &j)| d[i][j]).sum::<f64>())
        .fold(f64::INFINITY, f64::min);
    Ok((best / n as f64).powf(1.0 / order))
}
