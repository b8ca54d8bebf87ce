//! Logistic loss with its analytic constants and a deterministic projected
//! gradient ERM solver over weighted empirical distributions.
//!
//! Soft labels `q ∈ [0, 1]` are evaluated as the class mixture
//! `q·ℓ(+1, x, θ) + (1 − q)·ℓ(−1, x, θ)` with the margin sign encoding
//! `1.0 ↦ +1`, `0.0 ↦ −1`. The mixture gradient simplifies to
//! `(σ(⟨θ,x⟩) − q)·x`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::{EmpiricalDistribution, SpaceSpec};
use crate::transport;

pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_ITER: usize = 50_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    Logistic,
    RidgeLogistic,
}

/// Loss family plus the space it acts on.
#[derive(Debug, Clone, PartialEq)]
pub struct LossSpec {
    kind: LossKind,
    ridge_lambda: f64,
    space: SpaceSpec,
}

impl LossSpec {
    pub fn new(kind: LossKind, ridge_lambda: f64, space: SpaceSpec) -> Result<Self> {
        match kind {
            LossKind::Logistic if ridge_lambda != 0.0 => Err(Error::InvalidLoss(
                "plain logistic loss takes ridge_lambda = 0".into(),
            )),
            LossKind::RidgeLogistic if !(ridge_lambda > 0.0 && ridge_lambda.is_finite()) => {
                Err(Error::InvalidLoss(format!(
                    "ridge_logistic requires ridge_lambda > 0, got {ridge_lambda}"
                )))
            }
            _ => Ok(Self {
                kind,
                ridge_lambda,
                space,
            }),
        }
    }

    pub fn logistic(space: SpaceSpec) -> Self {
        Self {
            kind: LossKind::Logistic,
            ridge_lambda: 0.0,
            space,
        }
    }

    pub fn ridge_logistic(space: SpaceSpec, lambda: f64) -> Result<Self> {
        Self::new(LossKind::RidgeLogistic, lambda, space)
    }

    pub fn kind(&self) -> LossKind {
        self.kind
    }

    pub fn ridge_lambda(&self) -> f64 {
        self.ridge_lambda
    }

    pub fn space(&self) -> &SpaceSpec {
        &self.space
    }

    /// Analytic constants of this loss over the configured space.
    pub fn constants(&self) -> LossConstants {
        let (d_x, theta_sup) = self.space.diameters_x_theta();
        let lambda = self.ridge_lambda;
        LossConstants {
            l_ell: loss_lipschitz_constant(&self.space) + lambda * theta_sup,
            // Hessian of the logistic part is σ(1−σ)·x xᵀ ⪯ ‖x‖²/4.
            kappa: d_x * d_x / 4.0 + lambda,
            gamma: lambda,
            f_bound: d_x * theta_sup,
        }
    }
}

/// Lipschitz and curvature constants of a loss.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossConstants {
    /// Lipschitz constant of the loss in θ.
    pub l_ell: f64,
    /// Lipschitz constant of the gradient.
    pub kappa: f64,
    /// Strong-convexity modulus; zero for the plain logistic loss.
    pub gamma: f64,
    /// Uniform bound on `|⟨θ, x⟩|`.
    pub f_bound: f64,
}

/// Linear predictor parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Model {
    pub theta: Vec<f64>,
}

impl Model {
    pub fn new(theta: Vec<f64>) -> Self {
        Self { theta }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            theta: vec![0.0; dim],
        }
    }

    pub fn margin(&self, x: &[f64]) -> f64 {
        dot(&self.theta, x)
    }

    pub fn distance(&self, other: &Model) -> f64 {
        self.theta
            .iter()
            .zip(&other.theta)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| u * v).sum()
}

fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

pub fn sigmoid(u: f64) -> f64 {
    if u >= 0.0 {
        1.0 / (1.0 + (-u).exp())
    } else {
        let e = u.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^u)` without overflow.
fn softplus(u: f64) -> f64 {
    if u > 0.0 {
        u + (-u).exp().ln_1p()
    } else {
        u.exp().ln_1p()
    }
}

pub fn loss(y: f64, x: &[f64], theta: &Model, spec: &LossSpec) -> f64 {
    let z = theta.margin(x);
    let data = y * softplus(-z) + (1.0 - y) * softplus(z);
    data + 0.5 * spec.ridge_lambda * norm_sq(&theta.theta)
}

/// `σ(z) − q`, written so that it does not cancel when `σ(z)` rounds to 1.
fn residual(z: f64, q: f64) -> f64 {
    (1.0 - q) * sigmoid(z) - q * sigmoid(-z)
}

pub fn loss_gradient(y: f64, x: &[f64], theta: &Model, spec: &LossSpec) -> Vec<f64> {
    let r = residual(theta.margin(x), y);
    x.iter()
        .zip(&theta.theta)
        .map(|(xi, ti)| r * xi + spec.ridge_lambda * ti)
        .collect()
}

/// `D_X / (1 + exp(−D_X·D_Θ))`, with `D_Θ` measured per the space's
/// [`ThetaSpan`](crate::space::ThetaSpan) convention.
pub fn loss_lipschitz_constant(space: &SpaceSpec) -> f64 {
    let (d_x, _) = space.diameters_x_theta();
    let d_theta = space.theta_diameter();
    d_x / (1.0 + (-d_x * d_theta).exp())
}

pub fn risk(p: &EmpiricalDistribution, theta: &Model, spec: &LossSpec) -> f64 {
    p.iter().map(|(z, w)| w * loss(z.y, &z.x, theta, spec)).sum()
}

pub fn risk_gradient(p: &EmpiricalDistribution, theta: &Model, spec: &LossSpec) -> Vec<f64> {
    let mut g = vec![0.0; theta.theta.len()];
    for (z, w) in p.iter() {
        let r = w * residual(theta.margin(&z.x), z.y);
        for (gi, xi) in g.iter_mut().zip(&z.x) {
            *gi += r * xi;
        }
    }
    for (gi, ti) in g.iter_mut().zip(&theta.theta) {
        *gi += spec.ridge_lambda * ti;
    }
    g
}

/// Gradient mapping norm `‖θ − Π(θ − α∇R(θ))‖ / α`; equals `‖∇R‖` in the
/// interior and vanishes at box-constrained stationary points.
pub fn projected_gradient_norm(theta: &Model, grad: &[f64], space: &SpaceSpec, step: f64) -> f64 {
    let mut stepped: Vec<f64> = theta.theta.iter().zip(grad).map(|(t, g)| t - step * g).collect();
    space.project_theta(&mut stepped);
    theta
        .theta
        .iter()
        .zip(&stepped)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
        / step
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErmStatus {
    Converged,
    /// The iteration cap was hit before the tolerance; the iterate is still
    /// returned.
    MaxIterReached,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErmFit {
    pub model: Model,
    pub iterations: usize,
    pub projected_grad_norm: f64,
    pub status: ErmStatus,
}

/// Empirical risk minimizer over the parameter box.
///
/// Projected gradient descent from `θ = 0` with a backtracking step size
/// that is allowed to grow between iterations. Deterministic.
pub fn erm(p: &EmpiricalDistribution, spec: &LossSpec, tol: f64, max_iter: usize) -> Result<ErmFit> {
    if !(tol > 0.0) {
        return Err(Error::InvalidLoss(format!("tolerance must be positive, got {tol}")));
    }
    let space = &spec.space;
    if p.dim() != space.d_x() {
        return Err(Error::DimensionMismatch {
            expected: space.d_x(),
            found: p.dim(),
        });
    }

    let mut theta = Model::zeros(space.d_x());
    space.project_theta(&mut theta.theta);
    let mut f = risk(p, &theta, spec);
    let mut g = risk_gradient(p, &theta, spec);
    let mut step = 1.0f64;
    let mut iterations = 0;

    loop {
        // Evaluated at the grown step: with a unit step, θ − ∇ rounds back to θ
        // once |∇| drops below half an ulp of θ.
        let pg = projected_gradient_norm(&theta, &g, space, step.max(1.0));
        if pg <= tol {
            return Ok(ErmFit {
                model: theta,
                iterations,
                projected_grad_norm: pg,
                status: ErmStatus::Converged,
            });
        }
        if iterations >= max_iter {
            return Ok(ErmFit {
                model: theta,
                iterations,
                projected_grad_norm: pg,
                status: ErmStatus::MaxIterReached,
            });
        }

        step *= 2.0;
        let (next, f_next) = loop {
            let mut cand: Vec<f64> = theta.theta.iter().zip(&g).map(|(t, gi)| t - step * gi).collect();
            space.project_theta(&mut cand);
            let delta: Vec<f64> = cand.iter().zip(&theta.theta).map(|(a, b)| a - b).collect();
            let cand = Model::new(cand);
            let f_cand = risk(p, &cand, spec);
            let model_val = f + dot(&g, &delta) + norm_sq(&delta) / (2.0 * step);
            if f_cand <= model_val + 1e-15 * f.abs() {
                break (cand, f_cand);
            }
            step *= 0.5;
            if step < 1e-300 {
                return Err(Error::Numerical("ERM line search collapsed".into()));
            }
        };
        theta = next;
        f = f_next;
        g = risk_gradient(p, &theta, spec);
        iterations += 1;
    }
}

/// `‖erm(P) − erm(Q)‖ / W_1(P, Q)`: an empirical witness for the
/// Lipschitz constant of `P ↦ argmin R(P, θ)`.
pub fn erm_stability_ratio(
    p: &EmpiricalDistribution,
    q: &EmpiricalDistribution,
    spec: &LossSpec,
) -> Result<Option<f64>> {
    let a = erm(p, spec, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
    let b = erm(q, spec, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
    let (w, _) = transport::wasserstein_order(p, q, &spec.space, 1.0)?;
    if w <= 0.0 {
        return Ok(None);
    }
    Ok(Some(a.model.distance(&b.model) / w))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{make_empirical, Instance, ThetaSpan};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn space() -> SpaceSpec {
        SpaceSpec::unit_cube(2, 100.0, 1.0).unwrap()
    }

    fn plain() -> LossSpec {
        LossSpec::logistic(space())
    }

    #[test]
    fn loss_at_zero_is_log2() {
        let s = plain();
        for (y, x) in [(1.0, vec![0.3, 0.9]), (0.0, vec![1.0, 1.0]), (0.4, vec![0.0, 0.5])] {
            assert_abs_diff_eq!(loss(y, &x, &Model::zeros(2), &s), 2f64.ln(), epsilon = 1e-15);
        }
    }

    #[test]
    fn loss_decreases_in_margin() {
        let s = plain();
        let x = [1.0, 0.0];
        let mut prev = f64::INFINITY;
        for t in [0.0, 1.0, 5.0, 20.0, 100.0] {
            let l = loss(1.0, &x, &Model::new(vec![t, 0.0]), &s);
            assert!(l < prev && l >= 0.0);
            prev = l;
        }
        assert!(prev < 1e-40);
    }

    #[test]
    fn soft_label_mixture() {
        // 0.5·log(1+e^{-1}) + 0.5·log(1+e^{1}), evaluated independently with mpmath.
        let expected = 0.813_261_687_518_223_2;
        let l = loss(0.5, &[1.0, 0.0], &Model::new(vec![1.0, 0.0]), &plain());
        assert_abs_diff_eq!(l, expected, epsilon = 1e-15);
    }

    #[test]
    fn gradient_examples() {
        let g = loss_gradient(1.0, &[1.0, 1.0], &Model::zeros(2), &plain());
        assert_eq!(g, vec![-0.5, -0.5]);
        let g = loss_gradient(0.5, &[0.7, 0.2], &Model::zeros(2), &plain());
        assert_eq!(g, vec![0.0, 0.0]);
    }

    #[test]
    fn lipschitz_constant_examples() {
        assert_abs_diff_eq!(loss_lipschitz_constant(&space()), 2f64.sqrt(), epsilon = 1e-9);
        let zero_theta = SpaceSpec::unit_cube(2, 0.0, 1.0).unwrap();
        assert_abs_diff_eq!(loss_lipschitz_constant(&zero_theta), 2f64.sqrt() / 2.0, epsilon = 1e-15);
        let zero_x = SpaceSpec::new(
            vec![crate::space::Interval::new(0.0, 0.0).unwrap(); 2],
            vec![crate::space::Interval::new(-1.0, 1.0).unwrap(); 2],
            1.0,
        )
        .unwrap();
        assert_eq!(loss_lipschitz_constant(&zero_x), 0.0);
        let sup = space().with_theta_span(ThetaSpan::SupNorm);
        assert_abs_diff_eq!(loss_lipschitz_constant(&sup), 2f64.sqrt(), epsilon = 1e-9);
    }

    #[test]
    fn constants() {
        let c = plain().constants();
        assert_eq!(c.gamma, 0.0);
        assert_abs_diff_eq!(c.kappa, 0.5, epsilon = 1e-15);
        let r = LossSpec::ridge_logistic(space(), 0.1).unwrap().constants();
        assert_abs_diff_eq!(r.gamma, 0.1);
        assert!(r.gamma <= r.kappa);
        assert!(LossSpec::ridge_logistic(space(), 0.0).is_err());
        assert!(LossSpec::new(LossKind::Logistic, 0.3, space()).is_err());
    }

    #[test]
    fn risk_examples() {
        let s = plain();
        let theta = Model::new(vec![0.4, -1.2]);
        let pts = vec![
            Instance::new(1.0, vec![0.2, 0.1]),
            Instance::new(0.0, vec![0.9, 0.3]),
            Instance::new(1.0, vec![0.5, 0.5]),
        ];
        let single = make_empirical(vec![pts[0].clone()]).unwrap();
        assert_eq!(risk(&single, &theta, &s), loss(1.0, &[0.2, 0.1], &theta, &s));
        let p = make_empirical(pts.clone()).unwrap();
        let mean = pts.iter().map(|z| loss(z.y, &z.x, &theta, &s)).sum::<f64>() / 3.0;
        assert_abs_diff_eq!(risk(&p, &theta, &s), mean, epsilon = 1e-15);
        assert_abs_diff_eq!(risk(&p, &Model::zeros(2), &s), 2f64.ln(), epsilon = 1e-15);
    }

    #[test]
    fn erm_single_point_hits_boundary() {
        let p = make_empirical(vec![Instance::new(1.0, vec![1.0, 0.0])]).unwrap();
        let fit = erm(&p, &plain(), 1e-300, DEFAULT_MAX_ITER).unwrap();
        assert_eq!(fit.status, ErmStatus::Converged);
        assert_eq!(fit.model.theta, vec![100.0, 0.0]);
    }

    #[test]
    fn erm_symmetric_is_zero() {
        let p = make_empirical(vec![
            Instance::new(1.0, vec![0.5, 0.5]),
            Instance::new(0.0, vec![0.5, 0.5]),
        ])
        .unwrap();
        let fit = erm(&p, &plain(), DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        assert!(fit.model.theta.iter().all(|t| t.abs() <= 1e-8));
    }

    #[test]
    fn erm_beats_random_search() {
        let mut rng = ChaCha8Rng::seed_from_u64(20);
        let pts: Vec<Instance> = (0..20)
            .map(|_| {
                let x = vec![rng.gen::<f64>(), rng.gen::<f64>()];
                let y = if rng.gen::<f64>() < sigmoid(3.0 * x[0] - 2.0 * x[1]) { 1.0 } else { 0.0 };
                Instance::new(y, x)
            })
            .collect();
        let p = make_empirical(pts).unwrap();
        let spec = LossSpec::ridge_logistic(space(), 0.1).unwrap();
        let fit = erm(&p, &spec, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        assert_eq!(fit.status, ErmStatus::Converged);
        assert!(fit.projected_grad_norm <= DEFAULT_TOL);
        let best = risk(&p, &fit.model, &spec);
        for _ in 0..1000 {
            let t = Model::new(vec![rng.gen_range(-100.0..100.0), rng.gen_range(-100.0..100.0)]);
            assert!(best <= risk(&p, &t, &spec));
        }
        // near-optimal draws around the solution too
        for _ in 0..1000 {
            let t = Model::new(fit.model.theta.iter().map(|v| v + rng.gen_range(-0.1..0.1)).collect());
            assert!(best <= risk(&p, &t, &spec) + 1e-15);
        }
    }

    #[test]
    fn erm_iteration_cap_is_a_warning() {
        let p = make_empirical(vec![Instance::new(1.0, vec![1.0, 0.2])]).unwrap();
        let fit = erm(&p, &plain(), 1e-300, 3).unwrap();
        assert_eq!(fit.status, ErmStatus::MaxIterReached);
        assert_eq!(fit.iterations, 3);
        assert!(erm(&p, &plain(), 0.0, 3).is_err());
    }

    #[test]
    fn erm_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let pts: Vec<Instance> = (0..15)
            .map(|_| Instance::new(rng.gen(), vec![rng.gen(), rng.gen()]))
            .collect();
        let p = make_empirical(pts).unwrap();
        let a = erm(&p, &plain(), DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        let b = erm(&p, &plain(), DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        assert_eq!(a.model.theta.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                   b.model.theta.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
    }
}
