//! Annealed sampling of the non-implausible region.
//!
//! Particles start uniform over the search box and are pushed through a
//! sequence of tempered targets `p_j(x) ∝ g(x)^β_j`, where `g` is the
//! probability of being non-implausible. Each step picks the temperature
//! increment so the importance weights keep a fixed effective sample size,
//! resamples systematically, then applies random-walk Metropolis moves with
//! reflection at the box faces. Every level is kept: the final one
//! concentrates on the high-probability NROY set, earlier ones remain
//! available for exploration.

use std::io::Write;

use rand::Rng as _;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::Cholesky;
use crate::scalar::{quantile, Scalar};
use crate::seed::rng_from;

/// Axis-aligned box in the simulator's native units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct SearchBox<T> {
    lower: Vec<T>,
    upper: Vec<T>,
}

impl<T: Scalar> SearchBox<T> {
    pub fn new(lower: Vec<T>, upper: Vec<T>) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(invalid("box bounds must be nonempty and of equal length"));
        }
        if lower.iter().zip(&upper).any(|(l, u)| !(l < u) || !l.is_finite() || !u.is_finite()) {
            return Err(invalid(format!("empty or unbounded box {lower:?} .. {upper:?}")));
        }
        Ok(Self { lower, upper })
    }

    /// `[0,1]^d`
    pub fn unit(d: usize) -> Self {
        Self {
            lower: vec![T::zero(); d],
            upper: vec![T::one(); d],
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[T] {
        &self.lower
    }

    pub fn upper(&self) -> &[T] {
        &self.upper
    }

    pub fn to_native(&self, u: &[T]) -> Vec<T> {
        u.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(v, (l, h))| *l + *v * (*h - *l))
            .collect()
    }

    pub fn to_unit(&self, x: &[T]) -> Vec<T> {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(v, (l, h))| (*v - *l) / (*h - *l))
            .collect()
    }

    pub fn contains(&self, x: &[T]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (l, h))| *v >= *l && *v <= *h)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnnealingConfig {
    pub n_per_level: usize,
    /// Upper bound on the number of levels, level 0 included.
    pub max_levels: usize,
    pub ess_fraction: f64,
    pub move_steps: usize,
    pub beta_max: f64,
    /// Stop once the interquartile range of `g` falls below this while the
    /// median `g` is at least one half.
    pub iqr_tolerance: f64,
    pub seed: u64,
}

impl Default for AnnealingConfig {
    fn default() -> Self {
        Self {
            n_per_level: 1000,
            max_levels: 20,
            ess_fraction: 0.5,
            move_steps: 5,
            beta_max: 64.0,
            iqr_tolerance: 1e-3,
            seed: 0,
        }
    }
}

impl AnnealingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_per_level < 10 {
            return Err(invalid("n_per_level must be at least 10"));
        }
        if !(self.ess_fraction > 0.0 && self.ess_fraction < 1.0) {
            return Err(invalid("ess_fraction must lie in (0, 1)"));
        }
        if self.max_levels < 1 {
            return Err(invalid("max_levels must be at least 1"));
        }
        if !(self.beta_max > 0.0) {
            return Err(invalid("beta_max must be positive"));
        }
        Ok(())
    }
}

/// Probability-valued objective `g : box → [0, 1]`.
pub trait Objective<T: Scalar>: Sync {
    fn value(&self, x: &[T]) -> T;

    /// `ln g(x)`. Override when `g` underflows in regions of interest.
    fn log_value(&self, x: &[T]) -> T {
        self.value(x).ln()
    }
}

/// Adapts a closure returning `g(x)`.
pub struct FnObjective<F>(pub F);

impl<T: Scalar, F: Fn(&[T]) -> T + Sync> Objective<T> for FnObjective<F> {
    fn value(&self, x: &[T]) -> T {
        (self.0)(x)
    }
}

/// Adapts a closure returning `ln g(x)`.
pub struct LogFnObjective<F>(pub F);

impl<T: Scalar, F: Fn(&[T]) -> T + Sync> Objective<T> for LogFnObjective<F> {
    fn value(&self, x: &[T]) -> T {
        (self.0)(x).exp()
    }

    fn log_value(&self, x: &[T]) -> T {
        (self.0)(x)
    }
}

/// One annealing level: the particles (native units) and their `g` values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Level<T> {
    pub beta: T,
    pub points: Vec<Vec<T>>,
    pub objective: Vec<T>,
    /// Fraction of accepted Metropolis moves while building the level.
    pub acceptance_rate: f64,
}

impl<T: Scalar> Level<T> {
    pub fn mean_objective(&self) -> T {
        self.objective.iter().copied().sum::<T>() / T::of(self.objective.len() as f64)
    }

    pub fn max_objective(&self) -> T {
        self.objective.iter().copied().fold(T::zero(), T::max)
    }

    pub fn objective_quantile(&self, q: f64) -> T {
        quantile(&self.objective, T::of(q))
    }

    pub fn objective_iqr(&self) -> T {
        self.objective_quantile(0.75) - self.objective_quantile(0.25)
    }
}

/// Nested annealed sample sets, level 0 first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct NroyLevels<T> {
    pub levels: Vec<Level<T>>,
}

impl<T: Scalar> NroyLevels<T> {
    pub fn betas(&self) -> Vec<T> {
        self.levels.iter().map(|l| l.beta).collect()
    }

    pub fn final_level(&self) -> &Level<T> {
        self.levels.last().expect("at least one level")
    }

    pub fn penultimate_level(&self) -> Option<&Level<T>> {
        self.levels.len().checked_sub(2).map(|i| &self.levels[i])
    }

    /// Writes `level,x1..xd,g` rows.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let d = self.levels.first().and_then(|l| l.points.first()).map_or(0, Vec::len);
        let mut header = vec!["level".to_string()];
        header.extend((1..=d).map(|i| format!("x{i}")));
        header.push("g".into());
        w.write_record(&header)?;
        for (j, level) in self.levels.iter().enumerate() {
            for (x, g) in level.points.iter().zip(&level.objective) {
                let mut row = vec![j.to_string()];
                row.extend(x.iter().map(|v| v.to_string()));
                row.push(g.to_string());
                w.write_record(&row)?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// True iff the best objective value on the final level is below `floor`.
pub fn empty_nroy_check<T: Scalar>(levels: &NroyLevels<T>, floor: T) -> bool {
    levels.final_level().max_objective() < floor
}

fn checked_log_value<T: Scalar, O: Objective<T>>(objective: &O, x: &[T]) -> Result<T> {
    let lg = objective.log_value(x);
    if lg.is_nan() || lg > T::of(1e-9) {
        return Err(Error::Objective {
            point: x.iter().map(|v| v.as_f64()).collect(),
            value: lg.exp().as_f64(),
        });
    }
    Ok(lg.min(T::zero()))
}

#[inline]
fn reflect<T: Scalar>(v: T) -> T {
    let two = T::of(2.0);
    let mut t = v % two;
    if t < T::zero() {
        t = t + two;
    }
    if t > T::one() {
        two - t
    } else {
        t
    }
}

fn ess<T: Scalar>(log_g: &[T], delta: T, max: T) -> T {
    let (mut s, mut s2) = (T::zero(), T::zero());
    for lg in log_g {
        if *lg > T::neg_infinity() {
            let w = (delta * (*lg - max)).exp();
            s = s + w;
            s2 = s2 + w * w;
        }
    }
    if s2 > T::zero() {
        s * s / s2
    } else {
        T::zero()
    }
}

/// Largest temperature increment (at most `remaining`) keeping the ESS at
/// `fraction` of the particles with positive objective.
fn next_increment<T: Scalar>(log_g: &[T], remaining: T, fraction: T) -> T {
    let finite: Vec<T> = log_g.iter().copied().filter(|v| *v > T::neg_infinity()).collect();
    let max = finite.iter().copied().fold(T::neg_infinity(), T::max);
    let target = fraction * T::of(finite.len() as f64);
    if ess(&finite, remaining, max) >= target {
        return remaining;
    }
    let (mut lo, mut hi) = (T::zero(), remaining);
    for _ in 0..200 {
        let mid = (lo + hi) / T::of(2.0);
        if mid <= lo || mid >= hi {
            break;
        }
        if ess(&finite, mid, max) >= target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if lo > T::zero() {
        lo
    } else {
        hi
    }
}

fn weighted_covariance<T: Scalar>(points: &[Vec<T>], weights: &[T], d: usize) -> Vec<T> {
    let mut mu = vec![T::zero(); d];
    for (p, w) in points.iter().zip(weights) {
        for k in 0..d {
            mu[k] = mu[k] + *w * p[k];
        }
    }
    let mut c = vec![T::zero(); d * d];
    for (p, w) in points.iter().zip(weights) {
        for i in 0..d {
            for j in 0..=i {
                c[i * d + j] = c[i * d + j] + *w * (p[i] - mu[i]) * (p[j] - mu[j]);
            }
        }
    }
    for i in 0..d {
        for j in 0..i {
            c[j * d + i] = c[i * d + j];
        }
    }
    c
}

fn systematic_resample<T: Scalar>(weights: &[T], u0: f64) -> Vec<usize> {
    let n = weights.len();
    let mut idx = Vec::with_capacity(n);
    let mut cum = weights[0].as_f64();
    let mut j = 0;
    for i in 0..n {
        let u = (u0 + i as f64) / n as f64;
        while u > cum && j + 1 < n {
            j += 1;
            cum += weights[j].as_f64();
        }
        idx.push(j);
    }
    idx
}

// Stream labels below the per-particle range.
const RESAMPLE_STREAM: u64 = u64::MAX;
const TARGET_ACCEPTANCE: f64 = 0.234;

/// Runs the annealing schedule over `bbox` and returns every level.
pub fn sample_nroy<T: Scalar, O: Objective<T>>(
    objective: &O,
    bbox: &SearchBox<T>,
    config: &AnnealingConfig,
) -> Result<NroyLevels<T>> {
    config.validate()?;
    let d = bbox.dim();
    let n = config.n_per_level;
    let seed = config.seed;

    // Level 0: uniform over the box.
    let init: Vec<(Vec<T>, T)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_from(seed, &[0, i as u64]);
            let u: Vec<T> = (0..d).map(|_| T::of(rng.gen::<f64>())).collect();
            let lg = checked_log_value(objective, &bbox.to_native(&u))?;
            Ok((u, lg))
        })
        .collect::<Result<_>>()?;
    let (mut unit, mut log_g): (Vec<Vec<T>>, Vec<T>) = init.into_iter().unzip();
    if log_g.iter().all(|v| *v == T::neg_infinity()) {
        return Err(Error::FlatObjective);
    }

    let make_level = |beta: T, unit: &[Vec<T>], log_g: &[T], acc: f64| Level {
        beta,
        points: unit.iter().map(|u| bbox.to_native(u)).collect(),
        objective: log_g.iter().map(|v| v.exp()).collect(),
        acceptance_rate: acc,
    };
    let mut levels = vec![make_level(T::zero(), &unit, &log_g, 0.0)];
    let beta_max = T::of(config.beta_max);
    let mut beta = T::zero();
    let mut scale = 1.0f64;
    let concentrated = |l: &Level<T>| {
        l.objective_iqr() < T::of(config.iqr_tolerance) && l.objective_quantile(0.5) >= T::of(0.5)
    };

    for j in 1..config.max_levels {
        let last = levels.last().expect("level 0 exists");
        if beta >= beta_max || concentrated(last) {
            break;
        }
        let delta = next_increment(&log_g, beta_max - beta, T::of(config.ess_fraction));

        // Normalized importance weights g^Δβ.
        let max = log_g.iter().copied().fold(T::neg_infinity(), T::max);
        let raw: Vec<T> = log_g
            .iter()
            .map(|lg| {
                if *lg > T::neg_infinity() {
                    (delta * (*lg - max)).exp()
                } else {
                    T::zero()
                }
            })
            .collect();
        let total: T = raw.iter().copied().sum();
        let weights: Vec<T> = raw.iter().map(|w| *w / total).collect();

        let cov = weighted_covariance(&unit, &weights, d);
        let u0: f64 = rng_from(seed, &[j as u64, RESAMPLE_STREAM]).gen();
        let picks = systematic_resample(&weights, u0);
        beta = (beta + delta).min(beta_max);
        unit = picks.iter().map(|&p| unit[p].clone()).collect();
        log_g = picks.iter().map(|&p| log_g[p]).collect();

        let mut accepted = 0usize;
        for step in 0..config.move_steps {
            let mut prop = vec![T::zero(); d * d];
            let s2 = T::of(0.5 * scale * scale);
            for i in 0..d * d {
                prop[i] = cov[i] * s2;
            }
            for i in 0..d {
                prop[i * d + i] = prop[i * d + i] + T::of(1e-6);
            }
            let proposal = Cholesky::factor_with_jitter(&prop, d, T::one())?.0;
            let moved: Vec<(Vec<T>, T, bool)> = unit
                .par_iter()
                .zip(log_g.par_iter())
                .enumerate()
                .map(|(i, (u, &lg))| {
                    let mut rng = rng_from(seed, &[j as u64, i as u64, step as u64]);
                    let z: Vec<T> = (0..d)
                        .map(|_| T::of(rng.sample::<f64, _>(StandardNormal)))
                        .collect();
                    let step = proposal.mul_lower(&z);
                    let cand: Vec<T> = u.iter().zip(&step).map(|(a, b)| reflect(*a + *b)).collect();
                    let lg_new = checked_log_value(objective, &bbox.to_native(&cand))?;
                    let log_u = T::of(rng.gen::<f64>().ln());
                    if lg_new > T::neg_infinity() && log_u < beta * (lg_new - lg) {
                        Ok((cand, lg_new, true))
                    } else {
                        Ok((u.clone(), lg, false))
                    }
                })
                .collect::<Result<_>>()?;
            let hits = moved.iter().filter(|m| m.2).count();
            accepted += hits;
            // Steer the proposal scale toward the usual random-walk
            // acceptance rate so moves stay local once the target
            // splits into separated modes.
            let rate = hits as f64 / n as f64;
            scale = (scale * (3.0 * (rate - TARGET_ACCEPTANCE)).exp()).clamp(1e-4, 2.0);
            for (k, (u, lg, _)) in moved.into_iter().enumerate() {
                unit[k] = u;
                log_g[k] = lg;
            }
        }
        let acc = if config.move_steps > 0 {
            accepted as f64 / (n * config.move_steps) as f64
        } else {
            0.0
        };
        levels.push(make_level(beta, &unit, &log_g, acc));
    }
    Ok(NroyLevels { levels })
}
