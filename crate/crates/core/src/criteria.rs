//! One-step learning criteria used to rank candidate runs: expected contour
//! improvement, expected risk, the entropic profile, and a flat baseline.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::emulator::{mixture_moments, PredictiveMixture};
use crate::error::{invalid, Error, Result};
use crate::implausibility::UncertaintyBudget;
use crate::scalar::{lex_cmp, Scalar};
use crate::special::{norm_cdf, norm_pdf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CriterionId {
    Eci,
    Risk,
    Entropy,
    /// Space-filling baseline: every sample scores 1.
    Lhs,
}

impl CriterionId {
    pub const ALL: [CriterionId; 4] = [Self::Eci, Self::Risk, Self::Entropy, Self::Lhs];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Eci => "eci",
            Self::Risk => "risk",
            Self::Entropy => "entropy",
            Self::Lhs => "lhs",
        }
    }
}

impl fmt::Display for CriterionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CriterionId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| invalid(format!("unknown criterion '{s}' (expected eci, risk, entropy or lhs)")))
    }
}

/// Gaussian summary of the emulator at one input plus the target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriterionInput<T> {
    pub mean: T,
    pub sigma: T,
    pub budget: UncertaintyBudget<T>,
    pub z: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct CriterionScore<T> {
    pub value: T,
    pub criterion: CriterionId,
}

/// Half-width used by the contour improvement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EciBand {
    /// `ε = k·√(σ² + σ²_md + σ²_me)`
    #[default]
    FullUncertainty,
    /// `ε = k·σ`
    EmulatorOnly,
}

/// How a hyperparameter mixture is reduced to the single Gaussian the
/// closed forms expect.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MixtureMode {
    #[default]
    MomentMatched,
    /// Weighted average of the criterion over mixture components.
    PerComponent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct CriterionOptions {
    pub mode: MixtureMode,
    pub eci_band: EciBand,
}

fn checked<T: Scalar>(value: T, scale: T, criterion: CriterionId) -> Result<CriterionScore<T>> {
    let tol = T::of(1e-9) * scale.max(T::one());
    if !(value >= -tol) {
        return Err(invalid(format!("{criterion} evaluated to {value}")));
    }
    Ok(CriterionScore {
        value: value.max(T::zero()),
        criterion,
    })
}

/// Expected contour improvement with `ε = k·v(x)`.
pub fn eci<T: Scalar>(c: &CriterionInput<T>) -> Result<CriterionScore<T>> {
    eci_with(c, EciBand::FullUncertainty)
}

pub fn eci_with<T: Scalar>(c: &CriterionInput<T>, band: EciBand) -> Result<CriterionScore<T>> {
    let sigma = c.sigma;
    let v = match band {
        EciBand::FullUncertainty => c.budget.total_sd(sigma * sigma),
        EciBand::EmulatorOnly => sigma,
    };
    if !(v > T::zero()) {
        return Err(Error::DegenerateVariance);
    }
    let eps = c.budget.k * v;
    let eps2 = eps * eps;
    let diff = c.mean - c.z;
    if sigma == T::zero() {
        return checked(eps2 - (diff * diff).min(eps2), eps2, CriterionId::Eci);
    }
    let z1 = (c.z - c.mean - eps) / sigma;
    let z2 = (c.z - c.mean + eps) / sigma;
    let (p1, p2) = (norm_pdf(z1), norm_pdf(z2));
    let value = (eps2 - diff * diff - sigma * sigma) * (norm_cdf(z2) - norm_cdf(z1))
        + sigma * sigma * (z2 * p2 - z1 * p1)
        + T::of(2.0) * diff * sigma * (p2 - p1);
    checked(value, eps2 + diff * diff, CriterionId::Eci)
}

/// Expected one-sided loss relative to the target level.
pub fn expected_risk<T: Scalar>(c: &CriterionInput<T>) -> Result<CriterionScore<T>> {
    if c.sigma == T::zero() {
        return Ok(CriterionScore {
            value: T::zero(),
            criterion: CriterionId::Risk,
        });
    }
    if !(c.sigma > T::zero()) {
        return Err(invalid(format!("negative emulator sd {}", c.sigma)));
    }
    let zbar = (c.z - c.mean) / c.sigma;
    // sign(0) is taken as +1.
    let s = if zbar >= T::zero() { T::one() } else { -T::one() };
    let value = c.sigma * (-s * zbar * norm_cdf(-s * zbar) + norm_pdf(zbar));
    checked(value, c.sigma, CriterionId::Risk)
}

/// Absolute differential-entropy mass inside `z ± kσ`.
pub fn entropic_profile<T: Scalar>(c: &CriterionInput<T>) -> Result<CriterionScore<T>> {
    if !(c.sigma > T::zero()) {
        return Err(Error::DegenerateVariance);
    }
    let sigma = c.sigma;
    let half = c.budget.k * sigma;
    let z1 = (c.z - c.mean - half) / sigma;
    let z2 = (c.z - c.mean + half) / sigma;
    let log_norm = ((T::PI() * T::of(2.0)).sqrt() * sigma).ln() + T::of(0.5);
    let value = (log_norm * (norm_cdf(z2) - norm_cdf(z1))
        - T::of(0.5) * (z2 * norm_pdf(z2) - z1 * norm_pdf(z1)))
    .abs();
    Ok(CriterionScore {
        value,
        criterion: CriterionId::Entropy,
    })
}

fn score_gaussian<T: Scalar>(
    criterion: CriterionId,
    input: &CriterionInput<T>,
    options: &CriterionOptions,
) -> Result<T> {
    Ok(match criterion {
        CriterionId::Eci => eci_with(input, options.eci_band)?.value,
        CriterionId::Risk => expected_risk(input)?.value,
        // A zero-width band integrates to zero.
        CriterionId::Entropy if input.sigma == T::zero() => T::zero(),
        CriterionId::Entropy => entropic_profile(input)?.value,
        CriterionId::Lhs => T::one(),
    })
}

/// Criterion value for a mixture prediction.
pub fn score_mixture<T: Scalar>(
    criterion: CriterionId,
    mix: &PredictiveMixture<T>,
    budget: &UncertaintyBudget<T>,
    z: T,
    options: &CriterionOptions,
) -> Result<T> {
    match options.mode {
        MixtureMode::MomentMatched => {
            let (mean, var) = mixture_moments(mix);
            let input = CriterionInput {
                mean,
                sigma: var.sqrt(),
                budget: *budget,
                z,
            };
            score_gaussian(criterion, &input, options)
        }
        MixtureMode::PerComponent => mix.components().iter().try_fold(T::zero(), |acc, c| {
            let input = CriterionInput {
                mean: c.mean,
                sigma: c.sd(),
                budget: *budget,
                z,
            };
            Ok(acc + c.weight * score_gaussian(criterion, &input, options)?)
        }),
    }
}

/// A candidate point with its criterion score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct RankedSample<T> {
    pub point: Vec<T>,
    pub score: CriterionScore<T>,
}

/// Orders precomputed scores descending, breaking ties by lexicographic
/// point order.
pub fn rank_by_scores<T: Scalar>(
    criterion: CriterionId,
    points: Vec<Vec<T>>,
    scores: Vec<T>,
) -> Vec<RankedSample<T>> {
    let mut ranked: Vec<RankedSample<T>> = points
        .into_iter()
        .zip(scores)
        .map(|(point, value)| RankedSample {
            point,
            score: CriterionScore { value, criterion },
        })
        .collect();
    ranked.sort_by(|a, b| {
        b.score
            .value
            .partial_cmp(&a.score.value)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| lex_cmp(&a.point, &b.point))
    });
    ranked
}

/// Scores and ranks `(point, prediction)` pairs for a single output.
pub fn rank_samples<T: Scalar>(
    criterion: CriterionId,
    samples: &[(Vec<T>, PredictiveMixture<T>)],
    budget: &UncertaintyBudget<T>,
    z: T,
    options: &CriterionOptions,
) -> Result<Vec<RankedSample<T>>> {
    if samples.is_empty() {
        return Err(invalid("cannot rank an empty sample set"));
    }
    let scores = samples
        .iter()
        .map(|(_, mix)| score_mixture(criterion, mix, budget, z, options))
        .collect::<Result<Vec<_>>>()?;
    let points = samples.iter().map(|(p, _)| p.clone()).collect();
    Ok(rank_by_scores(criterion, points, scores))
}
