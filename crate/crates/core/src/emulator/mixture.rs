use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct MixtureComponent<T> {
    pub weight: T,
    pub mean: T,
    pub variance: T,
}

impl<T: Scalar> MixtureComponent<T> {
    pub fn sd(&self) -> T {
        self.variance.sqrt()
    }
}

/// Weighted Gaussian mixture predictive distribution at one input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct PredictiveMixture<T> {
    components: Vec<MixtureComponent<T>>,
}

fn weight_tolerance<T: Scalar>(n: usize) -> T {
    T::of(1e-12).max(T::epsilon() * T::of(16.0 * n as f64))
}

impl<T: Scalar> PredictiveMixture<T> {
    pub fn new(components: Vec<MixtureComponent<T>>) -> Result<Self> {
        if components.is_empty() {
            return Err(invalid("mixture needs at least one component"));
        }
        for c in &components {
            if !(c.weight > T::zero()) || !c.mean.is_finite() || !(c.variance >= T::zero()) {
                return Err(invalid(format!("invalid mixture component {c:?}")));
            }
        }
        let total: T = components.iter().map(|c| c.weight).sum();
        if (total - T::one()).abs() > weight_tolerance(components.len()) {
            return Err(invalid(format!("mixture weights sum to {total}, not 1")));
        }
        Ok(Self { components })
    }

    /// One Gaussian with unit weight.
    pub fn single(mean: T, variance: T) -> Result<Self> {
        Self::new(vec![MixtureComponent {
            weight: T::one(),
            mean,
            variance,
        }])
    }

    /// Equal-weight mixture of `(mean, variance)` pairs.
    pub fn equal_weights(parts: &[(T, T)]) -> Result<Self> {
        let w = T::one() / T::of(parts.len() as f64);
        Self::new(
            parts
                .iter()
                .map(|&(mean, variance)| MixtureComponent {
                    weight: w,
                    mean,
                    variance,
                })
                .collect(),
        )
    }

    pub fn components(&self) -> &[MixtureComponent<T>] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }
}

/// Mean and variance of the mixture by the law of total variance.
pub fn mixture_moments<T: Scalar>(mix: &PredictiveMixture<T>) -> (T, T) {
    let mean: T = mix.components.iter().map(|c| c.weight * c.mean).sum();
    let var: T = mix
        .components
        .iter()
        .map(|c| {
            let d = c.mean - mean;
            c.weight * (d * d + c.variance)
        })
        .sum();
    assert!(
        var >= -T::of(1e-12),
        "mixture variance {var} is negative beyond tolerance"
    );
    (mean, var.max(T::zero()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_and_symmetric_cases() {
        let m = PredictiveMixture::single(3.2, 0.5).unwrap();
        assert_eq!(mixture_moments(&m), (3.2, 0.5));
        let m = PredictiveMixture::equal_weights(&[(-1.0, 0.0), (1.0, 0.0)]).unwrap();
        assert_eq!(mixture_moments(&m), (0.0, 1.0));
    }

    #[test]
    fn hand_built_two_component() {
        // 0.3·N(1, 0.2) + 0.7·N(-2, 0.5)
        let m = PredictiveMixture::new(vec![
            MixtureComponent { weight: 0.3f64, mean: 1.0, variance: 0.2 },
            MixtureComponent { weight: 0.7, mean: -2.0, variance: 0.5 },
        ])
        .unwrap();
        let mean = 0.3 * 1.0 + 0.7 * -2.0;
        let var = 0.3 * ((1.0 - mean) * (1.0 - mean) + 0.2) + 0.7 * ((-2.0 - mean) * (-2.0 - mean) + 0.5);
        let (mu, v) = mixture_moments(&m);
        assert!((mu - mean).abs() < 1e-15);
        assert!((v - var).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_weights() {
        let c = |w| MixtureComponent { weight: w, mean: 0.0, variance: 1.0 };
        assert!(PredictiveMixture::new(vec![c(0.5), c(0.4)]).is_err());
        assert!(PredictiveMixture::<f64>::new(vec![]).is_err());
        assert!(PredictiveMixture::new(vec![MixtureComponent { weight: 1.0, mean: 0.0, variance: -1.0 }]).is_err());
    }
}
