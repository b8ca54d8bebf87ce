use std::fs::File;
use std::path::{Path, PathBuf};

use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bounds::BoundInputs;
use crate::error::{Error, Result};
use crate::learner::{LossKind, LossSpec};
use crate::reciprocal::{AdaptationConfig, RunSettings};
use crate::space::{EmpiricalDistribution, Instance, SpaceSpec};

pub const DEFAULT_DELTA: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossConfig {
    pub kind: LossKind,
    #[serde(default)]
    pub ridge_lambda: f64,
}

/// Per-field replacements for the bound inputs a run derives from its space,
/// loss and data.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundOverrides {
    pub n: Option<usize>,
    pub m: Option<usize>,
    #[serde(rename = "T", alias = "t")]
    pub horizon: Option<usize>,
    pub p: Option<f64>,
    pub d: Option<usize>,
    pub d_z: Option<f64>,
    pub l_s: Option<f64>,
    pub l_ell: Option<f64>,
    pub delta: Option<f64>,
    pub c_a: Option<f64>,
    pub c_b: Option<f64>,
    pub kappa: Option<f64>,
    pub gamma: Option<f64>,
    pub l_a: Option<f64>,
    pub f_bound: Option<f64>,
    pub covering_entropy: Option<f64>,
}

impl BoundOverrides {
    /// Applies every field except `T`, which callers set per report.
    pub fn apply(&self, mut b: BoundInputs) -> BoundInputs {
        macro_rules! set {
            ($($f:ident),*) => { $( if let Some(v) = self.$f { b.$f = v; } )* };
        }
        set!(n, m, p, d, d_z, l_s, l_ell, delta, c_a, c_b, kappa, f_bound);
        if self.gamma.is_some() {
            b.gamma = self.gamma;
        }
        if self.l_a.is_some() {
            b.l_a = self.l_a;
        }
        if self.covering_entropy.is_some() {
            b.covering_entropy = self.covering_entropy;
        }
        b
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightedAtom {
    pub weight: f64,
    pub y: f64,
    pub x: Vec<f64>,
}

/// I.i.d. draws from a finite mixture of atoms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub n_labeled: usize,
    pub n_pool: usize,
    pub generator_seed: u64,
    pub true_distribution: Vec<WeightedAtom>,
}

impl SyntheticSpec {
    pub fn truth(&self) -> Result<EmpiricalDistribution> {
        let points = self
            .true_distribution
            .iter()
            .map(|a| Instance::new(a.y, a.x.clone()))
            .collect();
        let masses = self.true_distribution.iter().map(|a| a.weight).collect();
        EmpiricalDistribution::normalized(points, masses)
    }

    /// `(labeled, pool)`; pool rows carry the lower end of the label range
    /// as a placeholder label.
    pub fn generate(&self, space: &SpaceSpec) -> Result<(Vec<Instance>, Vec<Instance>)> {
        let truth = self.truth()?;
        truth.check_space(space)?;
        let index = WeightedIndex::new(truth.weights())
            .map_err(|e| Error::InvalidWeights(e.to_string()))?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.generator_seed);
        let atoms = truth.points();
        let labeled = (0..self.n_labeled)
            .map(|_| atoms[index.sample(&mut rng)].clone())
            .collect();
        let placeholder = space.label_range().lo();
        let pool = (0..self.n_pool)
            .map(|_| Instance::new(placeholder, atoms[index.sample(&mut rng)].x.clone()))
            .collect();
        Ok((labeled, pool))
    }
}

/// Exactly one of `labeled` (with optional `pool`) or `synthetic`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSpec {
    #[serde(default)]
    pub labeled: Option<PathBuf>,
    #[serde(default)]
    pub pool: Option<PathBuf>,
    #[serde(default)]
    pub synthetic: Option<SyntheticSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub space: SpaceSpec,
    pub loss: LossConfig,
    pub adaptation: AdaptationConfig,
    #[serde(rename = "T", alias = "horizon")]
    pub horizon: usize,
    #[serde(default)]
    pub solver: RunSettings,
    #[serde(default)]
    pub bounds: BoundOverrides,
    pub data: DataSpec,
    /// Gap budget for the stopping rule reported in the summary.
    #[serde(default)]
    pub epsilon: Option<f64>,
    /// Write `samples/sample_<t>.csv` for every iteration.
    #[serde(default)]
    pub export_samples: bool,
    pub output_dir: PathBuf,
}

impl ExperimentConfig {
    /// Reads a config and resolves relative paths against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path)
            .map_err(|e| Error::Config(format!("cannot open {}: {e}", path.display())))?;
        let mut cfg: Self = serde_json::from_reader(file)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        resolve(&mut cfg.output_dir);
        if let Some(p) = cfg.data.labeled.as_mut() {
            resolve(p);
        }
        if let Some(p) = cfg.data.pool.as_mut() {
            resolve(p);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.adaptation.validate()?;
        self.loss_spec()?;
        match (&self.data.labeled, &self.data.synthetic) {
            (Some(_), None) => {}
            (None, Some(_)) if self.data.pool.is_none() => {}
            _ => {
                return Err(Error::Config(
                    "data needs exactly one of `labeled` (CSV, optional `pool`) or `synthetic`".into(),
                ))
            }
        }
        if let Some(e) = self.epsilon {
            if !(e > 0.0 && e.is_finite()) {
                return Err(Error::Config(format!("epsilon = {e} must be positive")));
            }
        }
        Ok(())
    }

    pub fn loss_spec(&self) -> Result<LossSpec> {
        LossSpec::new(self.loss.kind, self.loss.ridge_lambda, self.space.clone())
    }

    /// `(labeled, pool)` rows.
    pub fn load_data(&self) -> Result<(Vec<Instance>, Vec<Instance>)> {
        if let Some(syn) = &self.data.synthetic {
            return syn.generate(&self.space);
        }
        let labeled_path = self.data.labeled.as_ref().expect("validated");
        let (labeled, mut pool) = read_csv(labeled_path, &self.space)?;
        if let Some(pool_path) = &self.data.pool {
            let (extra_labeled, extra_pool) = read_csv(pool_path, &self.space)?;
            pool.extend(extra_pool);
            pool.extend(extra_labeled.into_iter().map(|z| Instance::new(self.space.label_range().lo(), z.x)));
        }
        Ok((labeled, pool))
    }
}

/// Reads a CSV with header columns `x_1 … x_{d_x}` and `y`, in any order.
/// Rows with an empty `y` go to the pool. Extra columns are ignored.
pub fn read_csv(path: &Path, space: &SpaceSpec) -> Result<(Vec<Instance>, Vec<Instance>)> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let headers = reader.headers()?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::Config(format!("{}: missing column `{name}`", path.display())))
    };
    let y_col = column("y")?;
    let x_cols = (1..=space.d_x())
        .map(|k| column(&format!("x_{k}")))
        .collect::<Result<Vec<_>>>()?;
    let parse = |s: &str, row: usize| {
        s.trim().parse::<f64>().map_err(|_| {
            Error::Config(format!("{}: row {row}: `{s}` is not a number", path.display()))
        })
    };
    let (mut labeled, mut pool) = (Vec::new(), Vec::new());
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let row = i + 2;
        let x = x_cols
            .iter()
            .map(|&c| parse(record.get(c).unwrap_or(""), row))
            .collect::<Result<Vec<_>>>()?;
        let y_raw = record.get(y_col).unwrap_or("").trim();
        if y_raw.is_empty() {
            let z = Instance::new(space.label_range().lo(), x);
            space.check_instance(&z)?;
            pool.push(z);
        } else {
            let z = Instance::new(parse(y_raw, row)?, x);
            space.check_instance(&z)?;
            labeled.push(z);
        }
    }
    Ok((labeled, pool))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn csv_rows_split_on_empty_label() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        let mut f = File::create(&path).unwrap();
        writeln!(f, "y,x_2,x_1\n1,0.5,0.25\n,0.1,0.2\n0,1,0").unwrap();
        let space = SpaceSpec::unit_cube(2, 10.0, 1.0).unwrap();
        let (labeled, pool) = read_csv(&path, &space).unwrap();
        assert_eq!(labeled, vec![Instance::new(1.0, vec![0.25, 0.5]), Instance::new(0.0, vec![0.0, 1.0])]);
        assert_eq!(pool.len(), 1);
        assert_eq!(pool[0].x, vec![0.2, 0.1]);
    }

    #[test]
    fn csv_rejects_out_of_box_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        std::fs::write(&path, "x_1,x_2,y\n2,0,1\n").unwrap();
        let space = SpaceSpec::unit_cube(2, 10.0, 1.0).unwrap();
        assert!(matches!(read_csv(&path, &space), Err(Error::OutOfSpace(_))));
    }

    #[test]
    fn synthetic_draws_are_seeded() {
        let space = SpaceSpec::unit_cube(2, 10.0, 1.0).unwrap();
        let spec = SyntheticSpec {
            n_labeled: 20,
            n_pool: 5,
            generator_seed: 3,
            true_distribution: vec![
                WeightedAtom { weight: 1.0, y: 0.0, x: vec![0.1, 0.2] },
                WeightedAtom { weight: 3.0, y: 1.0, x: vec![0.9, 0.8] },
            ],
        };
        let a = spec.generate(&space).unwrap();
        assert_eq!(a, spec.generate(&space).unwrap());
        assert_eq!(a.0.len(), 20);
        assert_eq!(a.1.len(), 5);
        assert_eq!(spec.truth().unwrap().weights(), &[0.25, 0.75]);
    }

    #[test]
    fn overrides_replace_fields() {
        let base = BoundInputs::new(3, 1.0, 1.0, 10, 0.1);
        let o = BoundOverrides { n: Some(99), gamma: Some(0.5), horizon: Some(7), ..Default::default() };
        let b = o.apply(base);
        assert_eq!(b.n, 99);
        assert_eq!(b.gamma, Some(0.5));
        assert_eq!(b.horizon, 0);
    }
}
