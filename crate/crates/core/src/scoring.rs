//! Wave diagnostics: closed-form CRPS for Gaussian mixtures and the maximum
//! predictive standard deviation over the non-implausible samples.

use serde::{Deserialize, Serialize};

use crate::emulator::{mixture_moments, PosteriorEnsemble, PredictiveMixture};
use crate::error::{invalid, Result};
use crate::implausibility::TargetDatum;
use crate::scalar::{median, Scalar};
use crate::special::{norm_cdf, norm_pdf};

/// `A(m, σ²) = 2σφ(m/σ) + m(2Φ(m/σ) − 1)`, i.e. `E|X|` for `X ~ N(m, σ²)`.
pub fn crps_gaussian_helper<T: Scalar>(m: T, var: T) -> T {
    if var <= T::zero() {
        return m.abs();
    }
    let s = var.sqrt();
    let u = m / s;
    T::of(2.0) * s * norm_pdf(u) + m * (T::of(2.0) * norm_cdf(u) - T::one())
}

/// CRPS of a Gaussian mixture forecast against the value `z`.
pub fn crps_mixture<T: Scalar>(mix: &PredictiveMixture<T>, z: T) -> T {
    let comps = mix.components();
    let spread: T = comps
        .iter()
        .map(|c| c.weight * crps_gaussian_helper(z - c.mean, c.variance))
        .sum();
    let mut inner = T::zero();
    for (i, a) in comps.iter().enumerate() {
        // diagonal terms once, off-diagonal twice (A is even in m)
        inner = inner + a.weight * a.weight * crps_gaussian_helper(T::zero(), a.variance + a.variance);
        for b in &comps[..i] {
            inner = inner
                + T::of(2.0)
                    * a.weight
                    * b.weight
                    * crps_gaussian_helper(a.mean - b.mean, a.variance + b.variance);
        }
    }
    (spread - inner / T::of(2.0)).max(T::zero())
}

/// Per-output summary of one wave.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct OutputMetrics<T> {
    pub output_id: String,
    /// Largest mixture predictive standard deviation over the samples.
    pub max_predicted_error: T,
    /// Median over the samples of the CRPS at the target value.
    pub median_crps: T,
}

/// Metrics for one output from predictions already made at the samples.
pub fn metrics_from_predictions<T: Scalar>(
    predictions: &[PredictiveMixture<T>],
    target: &TargetDatum<T>,
) -> Result<OutputMetrics<T>> {
    if predictions.is_empty() {
        return Err(invalid("wave metrics need at least one sample"));
    }
    let max_sd = predictions
        .iter()
        .map(|m| mixture_moments(m).1.sqrt())
        .fold(T::zero(), T::max);
    let crps: Vec<T> = predictions.iter().map(|m| crps_mixture(m, target.z)).collect();
    Ok(OutputMetrics {
        output_id: target.output_id.clone(),
        max_predicted_error: max_sd,
        median_crps: median(&crps),
    })
}

/// Maximum predicted error and median CRPS over `samples`, one entry per
/// output.
pub fn wave_metrics<T: Scalar>(
    ensembles: &[PosteriorEnsemble<T>],
    samples: &[Vec<T>],
    targets: &[TargetDatum<T>],
) -> Result<Vec<OutputMetrics<T>>> {
    if ensembles.len() != targets.len() {
        return Err(invalid("one target per emulated output is required"));
    }
    ensembles
        .iter()
        .zip(targets)
        .map(|(e, t)| {
            let preds: Vec<_> = samples.iter().map(|x| e.predict(x)).collect();
            metrics_from_predictions(&preds, t)
        })
        .collect()
}
