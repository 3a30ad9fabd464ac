use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum KernelFamily {
    #[default]
    SquaredExponential,
    #[serde(rename = "matern-5/2")]
    Matern52,
}

/// Stationary covariance with per-dimension lengthscales.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct KernelSpec<T> {
    pub family: KernelFamily,
    pub lengthscales: Vec<T>,
    pub signal_variance: T,
    pub nugget: T,
}

impl<T: Scalar> KernelSpec<T> {
    pub fn new(
        family: KernelFamily,
        lengthscales: Vec<T>,
        signal_variance: T,
        nugget: T,
    ) -> Result<Self> {
        let spec = Self {
            family,
            lengthscales,
            signal_variance,
            nugget,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.lengthscales.is_empty() {
            return Err(invalid("kernel needs at least one lengthscale"));
        }
        if self.lengthscales.iter().any(|l| !(*l > T::zero() && l.is_finite())) {
            return Err(invalid(format!(
                "lengthscales must be positive, got {:?}",
                self.lengthscales
            )));
        }
        if !(self.signal_variance > T::zero() && self.signal_variance.is_finite()) {
            return Err(invalid(format!(
                "signal variance must be positive, got {}",
                self.signal_variance
            )));
        }
        if !(self.nugget >= T::zero() && self.nugget.is_finite()) {
            return Err(invalid(format!("nugget must be nonnegative, got {}", self.nugget)));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.lengthscales.len()
    }

    /// Squared distance with each axis divided by its lengthscale.
    #[inline]
    pub fn scaled_sq_dist(&self, a: &[T], b: &[T]) -> T {
        a.iter()
            .zip(b)
            .zip(&self.lengthscales)
            .map(|((x, y), l)| {
                let d = (*x - *y) / *l;
                d * d
            })
            .sum()
    }

    /// Correlation (unit signal variance) between two points.
    #[inline]
    pub fn correlation(&self, a: &[T], b: &[T]) -> T {
        let r2 = self.scaled_sq_dist(a, b);
        match self.family {
            KernelFamily::SquaredExponential => (-r2 / T::of(2.0)).exp(),
            KernelFamily::Matern52 => {
                let s5r = (T::of(5.0) * r2).sqrt();
                (T::one() + s5r + T::of(5.0) / T::of(3.0) * r2) * (-s5r).exp()
            }
        }
    }

    /// Noise-free covariance `k(a, b)`.
    #[inline]
    pub fn covariance(&self, a: &[T], b: &[T]) -> T {
        self.signal_variance * self.correlation(a, b)
    }

    /// Gram matrix (row-major) including the nugget on the diagonal.
    pub fn gram(&self, inputs: &[Vec<T>]) -> Vec<T> {
        let n = inputs.len();
        let mut k = vec![T::zero(); n * n];
        for i in 0..n {
            k[i * n + i] = self.signal_variance + self.nugget;
            for j in 0..i {
                let v = self.covariance(&inputs[i], &inputs[j]);
                k[i * n + j] = v;
                k[j * n + i] = v;
            }
        }
        k
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernels_at_reference_distances() {
        let se = KernelSpec::new(KernelFamily::SquaredExponential, vec![0.5], 2.0, 0.0).unwrap();
        // r = 1 after scaling
        assert!((se.covariance(&[0.0], &[0.5]) - 2.0 * (-0.5f64).exp()).abs() < 1e-15);
        let m = KernelSpec::new(KernelFamily::Matern52, vec![1.0], 1.0, 0.0).unwrap();
        let s5 = 5f64.sqrt();
        assert!((m.correlation(&[0.0], &[1.0]) - (1.0 + s5 + 5.0 / 3.0) * (-s5).exp()).abs() < 1e-15);
        assert_eq!(m.correlation(&[0.3], &[0.3]), 1.0);
    }

    #[test]
    fn validation() {
        assert!(KernelSpec::new(KernelFamily::Matern52, vec![0.0], 1.0, 0.0).is_err());
        assert!(KernelSpec::new(KernelFamily::Matern52, vec![1.0], 0.0, 0.0).is_err());
        assert!(KernelSpec::new(KernelFamily::Matern52, vec![1.0], 1.0, -1e-3).is_err());
    }

    #[test]
    fn family_names() {
        assert_eq!(serde_json::to_string(&KernelFamily::Matern52).unwrap(), "\"matern-5/2\"");
        assert_eq!(
            serde_json::to_string(&KernelFamily::SquaredExponential).unwrap(),
            "\"squared-exponential\""
        );
    }
}
