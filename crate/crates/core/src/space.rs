//! Instance space `Z = Y × X`, its metric, the parameter box and weighted
//! empirical distributions.
//!
//! Instances are points `(y, x)` with a real (soft) label `y` and a feature
//! vector `x`. Hard labels are stored as `0.0` / `1.0` so that labeled and
//! pseudo-labeled points share one representation. Distances are Euclidean
//! on the concatenated vector `(y, x)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack allowed when checking box membership and weight normalization.
pub const BOX_TOL: f64 = 1e-12;
pub const WEIGHT_TOL: f64 = 1e-12;

/// Closed interval `[lo, hi]`. Serialized as a two-element array.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 2]", into = "[f64; 2]")]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) {
            return Err(Error::InvalidSpace(format!(
                "interval [{lo}, {hi}] is unbounded"
            )));
        }
        if lo > hi {
            return Err(Error::InvalidSpace(format!("interval [{lo}, {hi}] is empty")));
        }
        Ok(Self { lo, hi })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    /// Largest absolute value attained in the interval.
    pub fn max_abs(&self) -> f64 {
        self.lo.abs().max(self.hi.abs())
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.lo - BOX_TOL && v <= self.hi + BOX_TOL
    }

    pub fn clamp(&self, v: f64) -> f64 {
        v.clamp(self.lo, self.hi)
    }
}

impl TryFrom<[f64; 2]> for Interval {
    type Error = Error;

    fn try_from(v: [f64; 2]) -> Result<Self> {
        Interval::new(v[0], v[1])
    }
}

impl From<Interval> for [f64; 2] {
    fn from(i: Interval) -> Self {
        [i.lo, i.hi]
    }
}

/// How the parameter-space "diameter" `D_Θ` entering the logistic Lipschitz
/// constant is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThetaSpan {
    /// `sup ‖θ‖` over the box: norm of the corner of largest magnitude.
    SupNorm,
    /// Norm of the vector of side lengths, e.g. `√(200² + 200²)` for
    /// `[−100, 100]²`. This is the convention of the worked logistic example.
    #[default]
    SideLengths,
}

/// Dimensions and boxes of the instance space and the parameter space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpaceSpecRaw", into = "SpaceSpecRaw")]
pub struct SpaceSpec {
    feature_box: Vec<Interval>,
    label_range: Interval,
    theta_box: Vec<Interval>,
    p: f64,
    theta_span: ThetaSpan,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SpaceSpecRaw {
    d_x: usize,
    #[serde(default = "default_d_y")]
    d_y: usize,
    feature_box: Vec<Interval>,
    #[serde(default = "default_label_range")]
    label_range: Interval,
    theta_box: Vec<Interval>,
    p: f64,
    #[serde(default)]
    theta_span: ThetaSpan,
}

fn default_d_y() -> usize {
    1
}

fn default_label_range() -> Interval {
    Interval { lo: 0.0, hi: 1.0 }
}

impl TryFrom<SpaceSpecRaw> for SpaceSpec {
    type Error = Error;

    fn try_from(raw: SpaceSpecRaw) -> Result<Self> {
        if raw.d_y != 1 {
            return Err(Error::InvalidSpace(format!(
                "only binary labels are supported (d_y = 1), got d_y = {}",
                raw.d_y
            )));
        }
        if raw.feature_box.len() != raw.d_x {
            return Err(Error::InvalidSpace(format!(
                "feature_box has {} intervals but d_x = {}",
                raw.feature_box.len(),
                raw.d_x
            )));
        }
        let mut spec = SpaceSpec::new(raw.feature_box, raw.theta_box, raw.p)?;
        spec.label_range = raw.label_range;
        spec.theta_span = raw.theta_span;
        Ok(spec)
    }
}

impl From<SpaceSpec> for SpaceSpecRaw {
    fn from(s: SpaceSpec) -> Self {
        SpaceSpecRaw {
            d_x: s.d_x(),
            d_y: 1,
            feature_box: s.feature_box,
            label_range: s.label_range,
            theta_box: s.theta_box,
            p: s.p,
            theta_span: s.theta_span,
        }
    }
}

impl SpaceSpec {
    /// Builds a space with labels in `[0, 1]`.
    ///
    /// The parameter box has one interval per feature (linear predictors
    /// without intercept). Requires `1 ≤ p ≤ 2` and `d = d_x + 1 > 2p`.
    pub fn new(feature_box: Vec<Interval>, theta_box: Vec<Interval>, p: f64) -> Result<Self> {
        if feature_box.is_empty() {
            return Err(Error::InvalidSpace("feature_box must be nonempty".into()));
        }
        if theta_box.len() != feature_box.len() {
            return Err(Error::InvalidSpace(format!(
                "theta_box has {} intervals but d_x = {}",
                theta_box.len(),
                feature_box.len()
            )));
        }
        if !(1.0..=2.0).contains(&p) {
            return Err(Error::InvalidSpace(format!("p = {p} outside [1, 2]")));
        }
        let d = feature_box.len() + 1;
        if (d as f64) <= 2.0 * p {
            return Err(Error::InvalidSpace(format!(
                "concentration rate requires d > 2p, got d = {d}, p = {p}"
            )));
        }
        Ok(Self {
            feature_box,
            label_range: default_label_range(),
            theta_box,
            p,
            theta_span: ThetaSpan::default(),
        })
    }

    /// `X = [0,1]^{d_x}`, `Θ = [−r, r]^{d_x}`.
    pub fn unit_cube(d_x: usize, theta_radius: f64, p: f64) -> Result<Self> {
        let unit = Interval::new(0.0, 1.0)?;
        let theta = Interval::new(-theta_radius, theta_radius)?;
        Self::new(vec![unit; d_x], vec![theta; d_x], p)
    }

    pub fn with_label_range(mut self, label_range: Interval) -> Self {
        self.label_range = label_range;
        self
    }

    pub fn with_theta_span(mut self, span: ThetaSpan) -> Self {
        self.theta_span = span;
        self
    }

    pub fn with_p(&self, p: f64) -> Result<Self> {
        let mut s = Self::new(self.feature_box.clone(), self.theta_box.clone(), p)?;
        s.label_range = self.label_range;
        s.theta_span = self.theta_span;
        Ok(s)
    }

    pub fn d_x(&self) -> usize {
        self.feature_box.len()
    }

    pub fn d_y(&self) -> usize {
        1
    }

    pub fn d(&self) -> usize {
        self.d_x() + self.d_y()
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn feature_box(&self) -> &[Interval] {
        &self.feature_box
    }

    pub fn label_range(&self) -> Interval {
        self.label_range
    }

    pub fn theta_box(&self) -> &[Interval] {
        &self.theta_box
    }

    pub fn theta_span(&self) -> ThetaSpan {
        self.theta_span
    }

    /// Supremum of [`instance_distance`] over `Z`.
    pub fn diameter_z(&self) -> f64 {
        let label = self.label_range.width();
        let features: f64 = self.feature_box.iter().map(|i| i.width().powi(2)).sum();
        (label * label + features).sqrt()
    }

    /// `(D_X, D_Θ)` as `(sup ‖x‖, sup ‖θ‖)` over the two boxes.
    pub fn diameters_x_theta(&self) -> (f64, f64) {
        (corner_norm(&self.feature_box), corner_norm(&self.theta_box))
    }

    /// `D_Θ` under the configured [`ThetaSpan`] convention.
    pub fn theta_diameter(&self) -> f64 {
        match self.theta_span {
            ThetaSpan::SupNorm => corner_norm(&self.theta_box),
            ThetaSpan::SideLengths => self
                .theta_box
                .iter()
                .map(|i| i.width().powi(2))
                .sum::<f64>()
                .sqrt(),
        }
    }

    pub fn check_instance(&self, z: &Instance) -> Result<()> {
        if z.x.len() != self.d_x() {
            return Err(Error::DimensionMismatch {
                expected: self.d_x(),
                found: z.x.len(),
            });
        }
        if !self.label_range.contains(z.y) {
            return Err(Error::OutOfSpace(format!(
                "label {} outside [{}, {}]",
                z.y, self.label_range.lo, self.label_range.hi
            )));
        }
        for (k, (v, iv)) in z.x.iter().zip(&self.feature_box).enumerate() {
            if !iv.contains(*v) {
                return Err(Error::OutOfSpace(format!(
                    "feature x_{} = {v} outside [{}, {}]",
                    k + 1,
                    iv.lo,
                    iv.hi
                )));
            }
        }
        Ok(())
    }

    /// Euclidean projection onto the parameter box.
    pub fn project_theta(&self, theta: &mut [f64]) {
        for (t, iv) in theta.iter_mut().zip(&self.theta_box) {
            *t = iv.clamp(*t);
        }
    }

    pub fn theta_in_box(&self, theta: &[f64]) -> bool {
        theta.len() == self.d_x() && theta.iter().zip(&self.theta_box).all(|(t, iv)| iv.contains(*t))
    }
}

fn corner_norm(b: &[Interval]) -> f64 {
    b.iter().map(|i| i.max_abs().powi(2)).sum::<f64>().sqrt()
}

/// A point `(y, x)` of the instance space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub y: f64,
    pub x: Vec<f64>,
}

impl Instance {
    pub fn new(y: f64, x: Vec<f64>) -> Self {
        Self { y, x }
    }
}

/// Euclidean distance between `(y, x)` vectors.
pub fn instance_distance(a: &Instance, b: &Instance, space: &SpaceSpec) -> Result<f64> {
    for z in [a, b] {
        if z.x.len() != space.d_x() {
            return Err(Error::DimensionMismatch {
                expected: space.d_x(),
                found: z.x.len(),
            });
        }
    }
    Ok(raw_distance(a, b))
}

/// Distance without dimension checks; callers guarantee matching lengths.
pub(crate) fn raw_distance(a: &Instance, b: &Instance) -> f64 {
    let dy = a.y - b.y;
    let sq: f64 = a
        .x
        .iter()
        .zip(&b.x)
        .map(|(u, v)| (u - v) * (u - v))
        .sum();
    (dy * dy + sq).sqrt()
}

/// Weighted point cloud on `Z`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalDistribution {
    points: Vec<Instance>,
    weights: Vec<f64>,
}

impl EmpiricalDistribution {
    /// Uniform weights `1/n`, order preserved.
    pub fn uniform(points: Vec<Instance>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyDistribution);
        }
        check_dims(&points)?;
        let w = 1.0 / points.len() as f64;
        let weights = vec![w; points.len()];
        Ok(Self { points, weights })
    }

    /// Explicit weights; they must be nonnegative and sum to one.
    pub fn weighted(points: Vec<Instance>, weights: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyDistribution);
        }
        if points.len() != weights.len() {
            return Err(Error::InvalidWeights(format!(
                "{} points but {} weights",
                points.len(),
                weights.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::InvalidWeights(format!("weight {w} is not a nonnegative real")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_TOL {
            return Err(Error::InvalidWeights(format!("weights sum to {total}, not 1")));
        }
        check_dims(&points)?;
        Ok(Self { points, weights })
    }

    /// Rescales nonnegative masses to sum to one.
    pub fn normalized(points: Vec<Instance>, masses: Vec<f64>) -> Result<Self> {
        let total: f64 = masses.iter().sum();
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::InvalidWeights(format!("total mass {total} cannot be normalized")));
        }
        Self::weighted(points, masses.into_iter().map(|m| m / total).collect())
    }

    pub fn points(&self) -> &[Instance] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points[0].x.len()
    }

    pub fn is_uniform(&self) -> bool {
        let w = 1.0 / self.len() as f64;
        self.weights.iter().all(|v| (v - w).abs() <= WEIGHT_TOL)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Instance, f64)> {
        self.points.iter().zip(self.weights.iter().copied())
    }

    pub fn check_space(&self, space: &SpaceSpec) -> Result<()> {
        self.points.iter().try_for_each(|z| space.check_instance(z))
    }
}

/// Uniform empirical distribution over `points`.
pub fn make_empirical(points: Vec<Instance>) -> Result<EmpiricalDistribution> {
    EmpiricalDistribution::uniform(points)
}

fn check_dims(points: &[Instance]) -> Result<()> {
    let d = points[0].x.len();
    match points.iter().find(|z| z.x.len() != d) {
        Some(z) => Err(Error::DimensionMismatch {
            expected: d,
            found: z.x.len(),
        }),
        None => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn cube() -> SpaceSpec {
        SpaceSpec::unit_cube(2, 100.0, 1.0).unwrap()
    }

    #[test]
    fn distance_examples() {
        let s = cube();
        let a = Instance::new(0.0, vec![0.0, 0.0]);
        let b = Instance::new(1.0, vec![1.0, 1.0]);
        let c = Instance::new(0.0, vec![0.3, 0.4]);
        assert_eq!(instance_distance(&a, &a, &s).unwrap(), 0.0);
        assert_abs_diff_eq!(instance_distance(&a, &b, &s).unwrap(), 3f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(instance_distance(&c, &a, &s).unwrap(), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn distance_dimension_mismatch() {
        let s = cube();
        let a = Instance::new(0.0, vec![0.0, 0.0]);
        let b = Instance::new(0.0, vec![0.0]);
        assert!(matches!(
            instance_distance(&a, &b, &s),
            Err(Error::DimensionMismatch { expected: 2, found: 1 })
        ));
    }

    #[test]
    fn diameters() {
        assert_abs_diff_eq!(cube().diameter_z(), 3f64.sqrt(), epsilon = 1e-15);

        let degenerate = SpaceSpec::new(
            vec![Interval::new(0.0, 0.0).unwrap(); 2],
            vec![Interval::new(-1.0, 1.0).unwrap(); 2],
            1.0,
        )
        .unwrap();
        assert_eq!(degenerate.diameter_z(), 1.0);

        let two = SpaceSpec::new(
            vec![Interval::new(0.0, 2.0).unwrap(); 2],
            vec![Interval::new(-1.0, 1.0).unwrap(); 2],
            1.0,
        )
        .unwrap()
        .with_label_range(Interval::new(0.0, 2.0).unwrap());
        assert_abs_diff_eq!(two.diameter_z(), 2.0 * 3f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn theta_conventions() {
        let s = cube();
        let (dx, dt) = s.diameters_x_theta();
        assert_abs_diff_eq!(dx, 2f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(dt, (2.0f64 * 100.0 * 100.0).sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(s.theta_diameter(), (2.0f64 * 200.0 * 200.0).sqrt(), epsilon = 1e-12);
        let sup = s.clone().with_theta_span(ThetaSpan::SupNorm);
        assert_abs_diff_eq!(sup.theta_diameter(), dt, epsilon = 1e-12);

        let point = SpaceSpec::unit_cube(2, 0.0, 1.0).unwrap();
        assert_eq!(point.diameters_x_theta().1, 0.0);
    }

    #[test]
    fn rejects_bad_spaces() {
        assert!(SpaceSpec::unit_cube(2, 1.0, 1.5).is_err()); // d = 3 ≤ 2p
        assert!(SpaceSpec::unit_cube(2, 1.0, 0.5).is_err());
        assert!(SpaceSpec::unit_cube(4, 1.0, 2.0).is_ok());
        assert!(Interval::new(1.0, 0.0).is_err());
        assert!(Interval::new(0.0, f64::INFINITY).is_err());
        let json = r#"{"d_x": 2, "feature_box": [[0,1],[0,1]], "theta_box": [[-1,1]], "p": 1}"#;
        assert!(serde_json::from_str::<SpaceSpec>(json).is_err());
    }

    #[test]
    fn json_config_roundtrip() {
        let json = r#"{"d_x": 2, "feature_box": [[0,1],[0,1]], "theta_box": [[-100,100],[-100,100]], "p": 1}"#;
        let s: SpaceSpec = serde_json::from_str(json).unwrap();
        assert_eq!(s, cube());
        let back: SpaceSpec = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn make_empirical_weights() {
        let p = |v: f64| Instance::new(0.0, vec![v, v]);
        assert!(matches!(make_empirical(vec![]), Err(Error::EmptyDistribution)));
        assert_eq!(make_empirical(vec![p(0.1)]).unwrap().weights(), &[1.0]);
        let four = make_empirical((0..4).map(|i| p(i as f64 / 4.0)).collect()).unwrap();
        assert_eq!(four.weights(), &[0.25; 4]);
        let three = make_empirical((0..3).map(|i| p(i as f64 / 3.0)).collect()).unwrap();
        assert_eq!(three.weights().iter().sum::<f64>(), 1.0);
        assert!(three.is_uniform());
    }

    #[test]
    fn weighted_validation() {
        let pts = vec![Instance::new(0.0, vec![0.0]), Instance::new(1.0, vec![1.0])];
        assert!(EmpiricalDistribution::weighted(pts.clone(), vec![0.5, 0.6]).is_err());
        assert!(EmpiricalDistribution::weighted(pts.clone(), vec![-0.5, 1.5]).is_err());
        assert!(EmpiricalDistribution::weighted(pts.clone(), vec![1.0]).is_err());
        let d = EmpiricalDistribution::normalized(pts, vec![1.0, 3.0]).unwrap();
        assert_eq!(d.weights(), &[0.25, 0.75]);
    }

    fn arb_instance() -> impl Strategy<Value = Instance> {
        (0.0..=1.0f64, 0.0..=1.0f64, 0.0..=1.0f64).prop_map(|(y, a, b)| Instance::new(y, vec![a, b]))
    }

    proptest! {
        #[test]
        fn metric_axioms(a in arb_instance(), b in arb_instance(), c in arb_instance()) {
            let s = cube();
            let ab = instance_distance(&a, &b, &s).unwrap();
            let ba = instance_distance(&b, &a, &s).unwrap();
            let bc = instance_distance(&b, &c, &s).unwrap();
            let ac = instance_distance(&a, &c, &s).unwrap();
            prop_assert!(ab >= 0.0);
            prop_assert_eq!(ab, ba);
            prop_assert!(ac <= ab + bc + 1e-12);
            prop_assert!(ab <= s.diameter_z() + 1e-12);
        }

        #[test]
        fn diameter_scales_linearly(c in 0.1..10.0f64) {
            let iv = Interval::new(0.0, c).unwrap();
            let th = Interval::new(-1.0, 1.0).unwrap();
            let scaled = SpaceSpec::new(vec![iv; 2], vec![th; 2], 1.0).unwrap().with_label_range(iv);
            prop_assert!((scaled.diameter_z() - c * cube().diameter_z()).abs() <= 1e-12 * c);
        }
    }
}
