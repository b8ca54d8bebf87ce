//! Generalization-gap, excess-risk and stopping-rule arithmetic.
//!
//! Every bound is a sum of named terms reported in a [`BoundReport`]:
//! a data term (training risk, or a risk difference on `P̂_0`), the initial
//! gap `L_ℓ·β_0`, a reciprocal gap driven by the sample adaptation, and for
//! excess-risk forms a complexity term from the covering entropy.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learner::LossConstants;
use crate::space::SpaceSpec;

const STRONG_CONVEXITY: &str = "strong convexity of the loss";
const ARGMIN_LIPSCHITZ: &str = "Lipschitz constant of P -> argmin R(P, θ)";
const COVERING: &str = "covering entropy of the hypothesis class";

/// Symbols shared by all bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    /// Initial sample size.
    pub n: usize,
    /// Units changed per iteration.
    pub m: usize,
    /// Iteration horizon `T`.
    #[serde(rename = "T", alias = "t")]
    pub horizon: usize,
    pub p: f64,
    /// Instance dimension `d = d_x + d_y`.
    pub d: usize,
    pub d_z: f64,
    pub l_s: f64,
    pub l_ell: f64,
    pub delta: f64,
    pub c_a: f64,
    pub c_b: f64,
    #[serde(default)]
    pub kappa: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l_a: Option<f64>,
    #[serde(default)]
    pub f_bound: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub covering_entropy: Option<f64>,
}

impl BoundInputs {
    /// Inputs for an instance space of dimension `d`, order `p` and diameter
    /// `d_z`, with the default `C_a`, `C_b`, `L_ℓ = 1`, `m = 1`, `T = 0` and
    /// `L_s = 0`.
    pub fn new(d: usize, p: f64, d_z: f64, n: usize, delta: f64) -> Self {
        let (c_a, c_b) = default_constants_for(d, p, d_z);
        Self {
            n,
            m: 1,
            horizon: 0,
            p,
            d,
            d_z,
            l_s: 0.0,
            l_ell: 1.0,
            delta,
            c_a,
            c_b,
            kappa: 0.0,
            gamma: None,
            l_a: None,
            f_bound: 0.0,
            covering_entropy: None,
        }
    }

    /// Inputs derived from a space and its loss constants. `γ` is left unset
    /// when the loss is not strongly convex; `L_a` is never filled in.
    pub fn from_space(space: &SpaceSpec, loss: &LossConstants, n: usize, delta: f64) -> Self {
        let mut out = Self::new(space.d(), space.p(), space.diameter_z(), n, delta);
        out.l_ell = loss.l_ell;
        out.kappa = loss.kappa;
        out.gamma = (loss.gamma > 0.0).then_some(loss.gamma);
        out.f_bound = loss.f_bound;
        out.covering_entropy = Some(covering_entropy_linear(space.d_x(), loss.f_bound));
        out
    }

    pub fn with_sample(mut self, n: usize, m: usize) -> Self {
        self.n = n;
        self.m = m;
        self
    }

    pub fn with_horizon(mut self, horizon: usize) -> Self {
        self.horizon = horizon;
        self
    }

    pub fn with_ls(mut self, l_s: f64) -> Self {
        self.l_s = l_s;
        self
    }

    pub fn with_l_ell(mut self, l_ell: f64) -> Self {
        self.l_ell = l_ell;
        self
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    pub fn with_constants(mut self, c_a: f64, c_b: f64) -> Self {
        self.c_a = c_a;
        self.c_b = c_b;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidBoundInput(msg));
        if self.n == 0 || self.m == 0 {
            return bad("n and m must be positive".into());
        }
        if !(1.0..=2.0).contains(&self.p) {
            return bad(format!("p = {} must lie in [1, 2]", self.p));
        }
        if !(self.d as f64 > 2.0 * self.p) {
            return bad(format!("d = {} must exceed 2p = {}", self.d, 2.0 * self.p));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return bad(format!("delta = {} must lie in (0, 1)", self.delta));
        }
        for (name, v) in [("D_Z", self.d_z), ("L_s", self.l_s), ("L_ell", self.l_ell), ("kappa", self.kappa), ("F_bound", self.f_bound)] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} = {v} must be finite and nonnegative"));
            }
        }
        for (name, v) in [("C_a", self.c_a), ("C_b", self.c_b)] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} = {v} must be finite and positive"));
            }
        }
        for (name, v) in [("gamma", self.gamma), ("L_a", self.l_a), ("covering_entropy", self.covering_entropy)] {
            if let Some(v) = v {
                if !(v >= 0.0 && v.is_finite()) {
                    return bad(format!("{name} = {v} must be finite and nonnegative"));
                }
            }
        }
        Ok(())
    }

    /// Single-step movement cap `(m/n)^{1/p} · D_Z`.
    pub fn step_cap(&self) -> f64 {
        (self.m as f64 / self.n as f64).powf(1.0 / self.p) * self.d_z
    }

    pub fn beta_0(&self) -> Result<f64> {
        concentration_radius(self.n, self.delta, self.p, self.d, self.c_a, self.c_b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TheoremId {
    /// Gap of the convergent solution, reciprocal term `L_ℓ β_∞`.
    GenGap,
    /// Gap valid for all iterations up to `T`, reciprocal term `L_ℓ β_T`.
    AnytimeGap,
    /// Excess risk of the convergent solution.
    ExcessRisk,
    /// Excess risk valid for all iterations up to `T`.
    AnytimeExcessRisk,
    /// Excess risk from a measured risk difference on `P̂_0`.
    DataDependentExcess,
}

impl TheoremId {
    pub const ALL: [TheoremId; 5] = [
        TheoremId::GenGap,
        TheoremId::AnytimeGap,
        TheoremId::ExcessRisk,
        TheoremId::AnytimeExcessRisk,
        TheoremId::DataDependentExcess,
    ];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub theorem_id: TheoremId,
    pub initial_gap: f64,
    pub reciprocal_gap: f64,
    pub complexity_term: f64,
    /// Training risk for gap bounds, risk difference on `P̂_0` for the
    /// data-dependent excess bound, absent otherwise.
    pub data_term: Option<f64>,
    pub total: f64,
    pub confidence: f64,
}

impl BoundReport {
    fn assemble(
        theorem_id: TheoremId,
        initial_gap: f64,
        reciprocal_gap: f64,
        complexity_term: f64,
        data_term: Option<f64>,
        confidence: f64,
    ) -> Self {
        let total = data_term.unwrap_or(0.0) + initial_gap + reciprocal_gap + complexity_term;
        Self {
            theorem_id,
            initial_gap,
            reciprocal_gap,
            complexity_term,
            data_term,
            total,
            confidence,
        }
    }

    /// `initial_gap + reciprocal_gap`, the part of a gap bound that does not
    /// depend on the data.
    pub fn gap_terms(&self) -> f64 {
        self.initial_gap + self.reciprocal_gap
    }
}

/// `Σ_{t<T} r^t`, equal to `T` at `r = 1`.
pub fn geometric_sum(r: f64, horizon: usize) -> f64 {
    if horizon == 0 {
        return 0.0;
    }
    let t = horizon as f64;
    let h = r - 1.0;
    if h == 0.0 {
        t
    } else {
        (t * h.ln_1p()).exp_m1() / h
    }
}

/// `β_T = (L_s^T − 1)/(L_s − 1) · (m/n)^{1/p} · D_Z`.
pub fn distortion_bound(l_s: f64, horizon: usize, m: usize, n: usize, p: f64, d_z: f64) -> f64 {
    geometric_sum(l_s, horizon) * (m as f64 / n as f64).powf(1.0 / p) * d_z
}

/// `β_∞ = (m/n)^{1/p} · D_Z / (1 − L_s)`.
pub fn distortion_limit(l_s: f64, m: usize, n: usize, p: f64, d_z: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&l_s) {
        return Err(Error::InvalidBoundInput(format!(
            "the distortion limit needs 0 ≤ L_s < 1, got {l_s}"
        )));
    }
    Ok((m as f64 / n as f64).powf(1.0 / p) * d_z / (1.0 - l_s))
}

/// `β_0 = (log(C_a/δ) / (C_b n))^{p/d}`, the radius that contains the law
/// with probability at least `1 − δ`.
pub fn concentration_radius(n: usize, delta: f64, p: f64, d: usize, c_a: f64, c_b: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidBoundInput(format!("delta = {delta} must lie in (0, 1)")));
    }
    if n == 0 {
        return Err(Error::InvalidBoundInput("n must be positive".into()));
    }
    if !(d as f64 > 2.0 * p) {
        return Err(Error::InvalidBoundInput(format!("d = {d} must exceed 2p = {}", 2.0 * p)));
    }
    if !(c_b > 0.0) {
        return Err(Error::InvalidBoundInput(format!("C_b = {c_b} must be positive")));
    }
    if c_a < delta {
        return Err(Error::InvalidBoundInput(format!("C_a = {c_a} is below delta = {delta}")));
    }
    Ok(((c_a / delta).ln() / (c_b * n as f64)).powf(p / d as f64))
}

/// `(C_a, C_b) = (2^{d/p}, 1/(4 D_Z²))`.
pub fn default_constants(space: &SpaceSpec) -> (f64, f64) {
    default_constants_for(space.d(), space.p(), space.diameter_z())
}

pub fn default_constants_for(d: usize, p: f64, d_z: f64) -> (f64, f64) {
    (2f64.powf(d as f64 / p), 1.0 / (4.0 * d_z * d_z))
}

/// `∫₀¹ √(d_θ · log(1 + 2R/ε)) dε`: the entropy integral of the parametric
/// covering bound `N(ε) ≤ (1 + 2R/ε)^{d_θ}` with `R = D_Θ · D_X`.
pub fn covering_entropy_linear(d_theta: usize, radius_product: f64) -> f64 {
    if d_theta == 0 || radius_product <= 0.0 {
        return 0.0;
    }
    let k = d_theta as f64;
    let two_r = 2.0 * radius_product;
    quadrature::double_exponential::integrate(
        |e: f64| if e > 0.0 { (k * (two_r / e).ln_1p()).sqrt() } else { 0.0 },
        0.0,
        1.0,
        1e-11,
    )
    .integral
}

fn initial_gap(inputs: &BoundInputs) -> Result<f64> {
    Ok(inputs.l_ell * inputs.beta_0()?)
}

/// Generalization gap of the convergent solution:
/// `train_risk + L_ℓ β_0 + L_ℓ (m/n)^{1/p} D_Z / (1 − L_s)`.
pub fn gen_gap_bound(inputs: &BoundInputs, train_risk: f64) -> Result<BoundReport> {
    inputs.validate()?;
    let beta = distortion_limit(inputs.l_s, inputs.m, inputs.n, inputs.p, inputs.d_z)?;
    Ok(BoundReport::assemble(
        TheoremId::GenGap,
        initial_gap(inputs)?,
        inputs.l_ell * beta,
        0.0,
        Some(train_risk),
        1.0 - inputs.delta,
    ))
}

/// Gap valid for every iteration up to `T`: `train_risk + L_ℓ β_0 + L_ℓ β_T`.
pub fn anytime_gap_bound(inputs: &BoundInputs, train_risk: f64) -> Result<BoundReport> {
    inputs.validate()?;
    let beta = distortion_bound(inputs.l_s, inputs.horizon, inputs.m, inputs.n, inputs.p, inputs.d_z);
    Ok(BoundReport::assemble(
        TheoremId::AnytimeGap,
        initial_gap(inputs)?,
        inputs.l_ell * beta,
        0.0,
        Some(train_risk),
        1.0 - inputs.delta,
    ))
}

/// `F L_ℓ/√n · (24 𝔠 + 2√(2 ln(1/δ)))`.
pub fn complexity_term(inputs: &BoundInputs) -> Result<f64> {
    let entropy = inputs.covering_entropy.ok_or(Error::MissingSymbol {
        symbol: "covering_entropy",
        condition: COVERING,
    })?;
    let tail = 2.0 * (2.0 * (1.0 / inputs.delta).ln()).sqrt();
    Ok(inputs.f_bound * inputs.l_ell / (inputs.n as f64).sqrt() * (24.0 * entropy + tail))
}

/// `(L_s κ/γ, L_a)` after checking both symbols are present and `γ > 0`.
fn contraction(inputs: &BoundInputs) -> Result<(f64, f64)> {
    let gamma = inputs.gamma.ok_or(Error::MissingSymbol {
        symbol: "gamma",
        condition: STRONG_CONVEXITY,
    })?;
    let l_a = inputs.l_a.ok_or(Error::MissingSymbol {
        symbol: "L_a",
        condition: ARGMIN_LIPSCHITZ,
    })?;
    if gamma <= 0.0 {
        return Err(Error::ConditionViolated {
            condition: STRONG_CONVEXITY,
            detail: "gamma = 0; use ridge_logistic for a strongly convex loss".into(),
        });
    }
    Ok((inputs.l_s * inputs.kappa / gamma, l_a))
}

/// Excess risk of the convergent solution:
/// `L_ℓ β_0 + L_ℓ L_a (m/n)^{1/p} D_Z / (1 − L_s κ/γ) + complexity`.
pub fn excess_risk_bound(inputs: &BoundInputs) -> Result<BoundReport> {
    inputs.validate()?;
    let (ratio, l_a) = contraction(inputs)?;
    if ratio >= 1.0 {
        return Err(Error::ConditionViolated {
            condition: STRONG_CONVEXITY,
            detail: format!("L_s·κ/γ = {ratio} must be below 1"),
        });
    }
    let middle = inputs.l_ell * l_a * inputs.step_cap() / (1.0 - ratio);
    Ok(BoundReport::assemble(
        TheoremId::ExcessRisk,
        initial_gap(inputs)?,
        middle,
        complexity_term(inputs)?,
        None,
        1.0 - inputs.delta / 2.0,
    ))
}

/// Excess risk valid for every iteration up to `T`; the reciprocal term is
/// `L_ℓ L_a ((L_s κ/γ)^T − 1)/((L_s κ/γ) − 1) (m/n)^{1/p} D_Z`.
pub fn anytime_excess_risk_bound(inputs: &BoundInputs) -> Result<BoundReport> {
    inputs.validate()?;
    let (ratio, l_a) = contraction(inputs)?;
    let middle = inputs.l_ell * l_a * geometric_sum(ratio, inputs.horizon) * inputs.step_cap();
    Ok(BoundReport::assemble(
        TheoremId::AnytimeExcessRisk,
        initial_gap(inputs)?,
        middle,
        complexity_term(inputs)?,
        None,
        1.0 - inputs.delta / 2.0,
    ))
}

/// Excess risk from the measured difference `R(P̂_0, θ̂_T) − R(P̂_0, θ̂_0)`.
pub fn data_dependent_excess_bound(
    inputs: &BoundInputs,
    risk_theta_t_on_p0: f64,
    risk_theta_0_on_p0: f64,
) -> Result<BoundReport> {
    inputs.validate()?;
    Ok(BoundReport::assemble(
        TheoremId::DataDependentExcess,
        initial_gap(inputs)?,
        0.0,
        complexity_term(inputs)?,
        Some(risk_theta_t_on_p0 - risk_theta_0_on_p0),
        1.0 - inputs.delta / 2.0,
    ))
}

/// Outcome of [`stopping_rule`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "status")]
pub enum StopDecision {
    /// `t_star` is the real solution of `gap(T) = ε`; `t_max = ⌊t_star⌋` is
    /// the last iteration whose anytime gap terms stay within budget.
    Finite { t_star: f64, t_max: u64 },
    /// The gap terms never exceed the budget.
    Unbounded,
}

/// Largest horizon whose anytime gap terms `L_ℓ β_0 + L_ℓ β_T` stay within
/// `epsilon`.
pub fn stopping_rule(epsilon: f64, inputs: &BoundInputs) -> Result<StopDecision> {
    inputs.validate()?;
    let init = initial_gap(inputs)?;
    if !(epsilon > init) {
        return Err(Error::BudgetExhausted {
            epsilon,
            initial_gap: init,
        });
    }
    let unit = inputs.l_ell * inputs.step_cap();
    if unit == 0.0 {
        return Ok(StopDecision::Unbounded);
    }
    let l_s = inputs.l_s;
    // Solve geometric_sum(L_s, T) = (ε − init) / unit for real T.
    let budget = (epsilon - init) / unit;
    let t_star = if l_s == 1.0 {
        budget
    } else if l_s == 0.0 {
        if budget >= 1.0 {
            return Ok(StopDecision::Unbounded);
        }
        budget
    } else {
        let arg = budget * (l_s - 1.0);
        if arg <= -1.0 {
            return Ok(StopDecision::Unbounded);
        }
        arg.ln_1p() / (l_s - 1.0).ln_1p()
    };
    if !t_star.is_finite() {
        return Ok(StopDecision::Unbounded);
    }
    let gap = |t: u64| init + unit * geometric_sum(l_s, t as usize);
    let mut t_max = t_star.floor().max(0.0) as u64;
    if t_star < 1e12 {
        while gap(t_max + 1) <= epsilon {
            t_max += 1;
        }
        while t_max > 0 && gap(t_max) > epsilon {
            t_max -= 1;
        }
    }
    Ok(StopDecision::Finite { t_star, t_max })
}
