//! Reciprocal learning: ERM alternating with model-dependent sample
//! adaptation, instantiated as self-training with soft pseudo-labels.
//!
//! Each iteration scores the unlabeled pool by confidence
//! `|σ(⟨θ,x⟩) − 0.5|`, draws `m` points by softmax-with-temperature sampling
//! (Gumbel top-k), labels them with `σ(⟨θ,x⟩)` and either appends them
//! (greedy) or swaps them in for `m` existing atoms (non-greedy). Selected
//! points leave the pool.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learner::{self, ErmStatus, LossSpec, Model};
use crate::space::{EmpiricalDistribution, Instance};
use crate::transport;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdaptationMode {
    GreedyAdd,
    NongreedyReplace,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReplacePolicy {
    /// Remove the oldest pseudo-labeled atoms. Labeled atoms are only taken,
    /// in sample order, when fewer than `m` pseudo-labeled atoms exist.
    #[default]
    OldestPseudo,
    /// Remove `m` atoms chosen uniformly at random (seeded).
    RandomSeeded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptationConfig {
    pub mode: AdaptationMode,
    /// Units changed per iteration; constant over a run.
    pub m: usize,
    /// Softmax temperature for candidate selection; `0` selects the top-m
    /// deterministically.
    pub selection_temperature: f64,
    #[serde(default)]
    pub replace_policy: ReplacePolicy,
    pub seed: u64,
}

impl AdaptationConfig {
    pub fn greedy(m: usize, temperature: f64, seed: u64) -> Self {
        Self {
            mode: AdaptationMode::GreedyAdd,
            m,
            selection_temperature: temperature,
            replace_policy: ReplacePolicy::default(),
            seed,
        }
    }

    pub fn nongreedy(m: usize, temperature: f64, policy: ReplacePolicy, seed: u64) -> Self {
        Self {
            mode: AdaptationMode::NongreedyReplace,
            m,
            selection_temperature: temperature,
            replace_policy: policy,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(Error::InvalidAdaptation("m must be positive".into()));
        }
        if !(self.selection_temperature >= 0.0 && self.selection_temperature.is_finite()) {
            return Err(Error::InvalidAdaptation(format!(
                "temperature must be a finite nonnegative real, got {}",
                self.selection_temperature
            )));
        }
        Ok(())
    }
}

/// Where an atom of the training sample came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Origin {
    Labeled,
    Pseudo { step: usize },
}

/// Empirical distribution plus per-atom provenance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainingSample {
    pub dist: EmpiricalDistribution,
    pub origin: Vec<Origin>,
}

impl TrainingSample {
    pub fn labeled(points: Vec<Instance>) -> Result<Self> {
        let origin = vec![Origin::Labeled; points.len()];
        Ok(Self {
            dist: EmpiricalDistribution::uniform(points)?,
            origin,
        })
    }

    pub fn len(&self) -> usize {
        self.dist.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dist.is_empty()
    }
}

/// Per-step RNG seed derived from the run seed (SplitMix64 finalizer).
pub fn step_seed(seed: u64, step: usize) -> u64 {
    let mut z = seed.wrapping_add((step as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Soft label `σ(⟨θ, x⟩)`.
pub fn pseudo_label(theta: &Model, x: &[f64]) -> f64 {
    learner::sigmoid(theta.margin(x))
}

pub fn confidence(theta: &Model, x: &[f64]) -> f64 {
    (pseudo_label(theta, x) - 0.5).abs()
}

/// Draws `m` pool indices without replacement, with probabilities
/// proportional to `exp(confidence / temperature)`.
pub fn select_candidates(
    theta: &Model,
    pool: &[Instance],
    m: usize,
    temperature: f64,
    seed: u64,
) -> Result<Vec<usize>> {
    if pool.len() < m {
        return Err(Error::PoolTooSmall {
            available: pool.len(),
            requested: m,
        });
    }
    let scores = pool.iter().map(|z| confidence(theta, &z.x));
    let mut keyed: Vec<(f64, usize)> = if temperature == 0.0 {
        scores.enumerate().map(|(i, c)| (c, i)).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        scores
            .enumerate()
            .map(|(i, c)| {
                let u: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
                (c / temperature - (-u.ln()).ln(), i)
            })
            .collect()
    };
    keyed.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    Ok(keyed.into_iter().take(m).map(|(_, i)| i).collect())
}

/// One sample adaptation step `P̂_{t} = f_s(θ̂_{t−1}, P̂_{t−1})`.
///
/// `step` is the index `t` of the sample being produced; it tags new atoms
/// and derives the step's random seed.
pub fn adapt_sample(
    theta: &Model,
    sample: &TrainingSample,
    pool: &[Instance],
    config: &AdaptationConfig,
    step: usize,
) -> Result<(TrainingSample, Vec<Instance>)> {
    config.validate()?;
    let m = config.m;
    if pool.is_empty() || pool.len() < m {
        return Err(Error::PoolTooSmall {
            available: pool.len(),
            requested: m,
        });
    }
    let seed = step_seed(config.seed, step);
    let chosen = select_candidates(theta, pool, m, config.selection_temperature, seed)?;

    let fresh: Vec<Instance> = chosen
        .iter()
        .map(|&i| Instance::new(pseudo_label(theta, &pool[i].x), pool[i].x.clone()))
        .collect();
    let mut taken = vec![false; pool.len()];
    for &i in &chosen {
        taken[i] = true;
    }
    let remaining: Vec<Instance> = pool
        .iter()
        .zip(&taken)
        .filter(|(_, t)| !**t)
        .map(|(z, _)| z.clone())
        .collect();

    let mut points = sample.dist.points().to_vec();
    let mut origin = sample.origin.clone();
    match config.mode {
        AdaptationMode::GreedyAdd => {
            points.extend(fresh);
            origin.extend(std::iter::repeat_n(Origin::Pseudo { step }, m));
        }
        AdaptationMode::NongreedyReplace => {
            if points.len() < m {
                return Err(Error::InvalidAdaptation(format!(
                    "cannot replace {m} atoms of a sample of size {}",
                    points.len()
                )));
            }
            let slots = replacement_slots(&origin, m, config.replace_policy, seed);
            for (slot, z) in slots.into_iter().zip(fresh) {
                points[slot] = z;
                origin[slot] = Origin::Pseudo { step };
            }
        }
    }
    let next = TrainingSample {
        dist: EmpiricalDistribution::uniform(points)?,
        origin,
    };
    Ok((next, remaining))
}

fn replacement_slots(origin: &[Origin], m: usize, policy: ReplacePolicy, seed: u64) -> Vec<usize> {
    match policy {
        ReplacePolicy::OldestPseudo => {
            let mut pseudo: Vec<(usize, usize)> = origin
                .iter()
                .enumerate()
                .filter_map(|(i, o)| match o {
                    Origin::Pseudo { step } => Some((*step, i)),
                    Origin::Labeled => None,
                })
                .collect();
            pseudo.sort_unstable();
            let mut slots: Vec<usize> = pseudo.into_iter().take(m).map(|(_, i)| i).collect();
            let labeled = origin
                .iter()
                .enumerate()
                .filter(|(_, o)| **o == Origin::Labeled)
                .map(|(i, _)| i);
            let short = m - slots.len();
            slots.extend(labeled.take(short));
            slots
        }
        ReplacePolicy::RandomSeeded => {
            // Distinct stream from candidate selection.
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5E_ED0F_5A4D_0A11);
            rand::seq::index::sample(&mut rng, origin.len(), m).into_vec()
        }
    }
}

/// Solver and recording settings for [`run_reciprocal`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSettings {
    pub erm_tol: f64,
    pub erm_max_iter: usize,
    /// Record `W_p(P̂_{t−1}, P̂_t)` at every step via the exact solver.
    pub track_wasserstein: bool,
}

impl Default for RunSettings {
    fn default() -> Self {
        Self {
            erm_tol: learner::DEFAULT_TOL,
            erm_max_iter: learner::DEFAULT_MAX_ITER,
            track_wasserstein: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationRecord {
    pub t: usize,
    pub theta: Model,
    pub sample: TrainingSample,
    /// `W_p(P̂_t, P̂_{t−1})`; absent at `t = 0` or when not tracked.
    pub step_wasserstein: Option<f64>,
    pub train_risk: f64,
    pub erm_iterations: usize,
    pub erm_status: ErmStatus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum PathStatus {
    Completed,
    /// The pool ran out; `horizon` is the last recorded iteration.
    PoolExhausted { horizon: usize },
}

/// The recorded process `(θ̂_0, P̂_0), …, (θ̂_T, P̂_T)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReciprocalPath {
    pub iterations: Vec<IterationRecord>,
    pub pool_remaining: Vec<Instance>,
    pub status: PathStatus,
    pub m: usize,
    pub mode: AdaptationMode,
}

impl ReciprocalPath {
    pub fn horizon(&self) -> usize {
        self.iterations.len() - 1
    }

    pub fn initial(&self) -> &IterationRecord {
        &self.iterations[0]
    }

    pub fn last(&self) -> &IterationRecord {
        self.iterations.last().expect("path has at least t = 0")
    }

    /// Recorded step distances `W(P̂_t, P̂_{t−1})` for `t = 1..=T`.
    pub fn step_distances(&self) -> Option<Vec<f64>> {
        self.iterations[1..].iter().map(|r| r.step_wasserstein).collect()
    }
}

pub fn run_reciprocal(
    labeled: Vec<Instance>,
    pool: Vec<Instance>,
    horizon: usize,
    loss: &LossSpec,
    adapt: &AdaptationConfig,
    settings: &RunSettings,
) -> Result<ReciprocalPath> {
    adapt.validate()?;
    let space = loss.space();
    for z in labeled.iter().chain(&pool) {
        space.check_instance(z)?;
    }
    let mut sample = TrainingSample::labeled(labeled)?;
    let mut pool = pool;

    let fit = learner::erm(&sample.dist, loss, settings.erm_tol, settings.erm_max_iter)?;
    let mut iterations = vec![IterationRecord {
        t: 0,
        train_risk: learner::risk(&sample.dist, &fit.model, loss),
        theta: fit.model,
        sample: sample.clone(),
        step_wasserstein: None,
        erm_iterations: fit.iterations,
        erm_status: fit.status,
    }];
    let mut status = PathStatus::Completed;

    for t in 1..=horizon {
        if pool.len() < adapt.m {
            status = PathStatus::PoolExhausted { horizon: t - 1 };
            break;
        }
        let theta_prev = &iterations[t - 1].theta;
        let (next, rest) = adapt_sample(theta_prev, &sample, &pool, adapt, t)?;
        let step_w = if settings.track_wasserstein {
            Some(transport::wasserstein(&sample.dist, &next.dist, space)?.0)
        } else {
            None
        };
        sample = next;
        pool = rest;
        let fit = learner::erm(&sample.dist, loss, settings.erm_tol, settings.erm_max_iter)?;
        iterations.push(IterationRecord {
            t,
            train_risk: learner::risk(&sample.dist, &fit.model, loss),
            theta: fit.model,
            sample: sample.clone(),
            step_wasserstein: step_w,
            erm_iterations: fit.iterations,
            erm_status: fit.status,
        });
    }

    Ok(ReciprocalPath {
        iterations,
        pool_remaining: pool,
        status,
        m: adapt.m,
        mode: adapt.mode,
    })
}

/// Largest ratio `s_{t+1} / s_t` of consecutive step distances, skipping
/// zero denominators. Requires at least two usable ratios.
pub fn estimate_ls_from_steps(steps: &[f64]) -> Result<f64> {
    let ratios: Vec<f64> = steps
        .windows(2)
        .filter(|w| w[0] > 0.0)
        .map(|w| w[1] / w[0])
        .collect();
    if ratios.len() < 2 {
        return Err(Error::NoUsableRatios {
            needed: 2,
            found: ratios.len(),
        });
    }
    Ok(ratios.into_iter().fold(f64::NEG_INFINITY, f64::max))
}

/// Empirical lower witness for the pathwise Lipschitz constant `L_s` of the
/// sample adaptation.
pub fn estimate_ls(path: &ReciprocalPath) -> Result<f64> {
    let steps = path.step_distances().ok_or(Error::NoUsableRatios { needed: 2, found: 0 })?;
    estimate_ls_from_steps(&steps)
}

/// First `t ≥ 1` where both the parameter and the sample stopped moving.
pub fn detect_convergence(path: &ReciprocalPath, tol: f64) -> Option<usize> {
    path.iterations.windows(2).find_map(|w| {
        let moved = w[1].theta.distance(&w[0].theta);
        match w[1].step_wasserstein {
            Some(s) if moved <= tol && s <= tol => Some(w[1].t),
            _ => None,
        }
    })
}

/// `L_s = (n − 1)/n` where the theory supplies it (one unit changed per
/// iteration); `None` otherwise.
pub fn theoretical_ls(m: usize, n: usize) -> Option<f64> {
    (m == 1 && n > 0).then(|| (n as f64 - 1.0) / n as f64)
}

/// Worst-case single-step movement `(m / n)^{1/p} · D_Z`.
pub fn step_cap(m: usize, n: usize, p: f64, diameter: f64) -> f64 {
    (m as f64 / n as f64).powf(1.0 / p) * diameter
}
