//! Zero-mean GP regression under a single fixed set of hyperparameters.

use crate::error::{invalid, Result};
use crate::linalg::Cholesky;
use crate::scalar::Scalar;

use super::kernel::KernelSpec;
use super::training::TrainingSet;

/// GP posterior conditioned on training data for one hyperparameter draw.
#[derive(Debug, Clone)]
pub struct ConditionedGp<T> {
    kernel: KernelSpec<T>,
    chol: Cholesky<T>,
    alpha: Vec<T>,
    jitter: T,
}

impl<T: Scalar> ConditionedGp<T> {
    /// Conditions on `(inputs, y)` where `y` is already centered.
    pub fn fit(inputs: &[Vec<T>], y: &[T], kernel: KernelSpec<T>) -> Result<Self> {
        kernel.validate()?;
        if inputs.first().map(Vec::len) != Some(kernel.dim()) {
            return Err(invalid("kernel dimension does not match the inputs"));
        }
        let n = inputs.len();
        let gram = kernel.gram(inputs);
        let (chol, jitter) = Cholesky::factor_with_jitter(&gram, n, kernel.signal_variance)?;
        let alpha = chol.solve(y);
        Ok(Self {
            kernel,
            chol,
            alpha,
            jitter,
        })
    }

    pub fn kernel(&self) -> &KernelSpec<T> {
        &self.kernel
    }

    /// Jitter added to the diagonal to make the Gram matrix factorizable.
    pub fn jitter(&self) -> T {
        self.jitter
    }

    /// `ln p(y | X, θ)` for the `y` this GP was conditioned on.
    pub fn log_marginal_likelihood(&self, y: &[T]) -> T {
        let n = y.len();
        let fit: T = y.iter().zip(&self.alpha).map(|(a, b)| *a * *b).sum();
        let ln_2pi = T::of(1.837_877_066_409_345_5);
        -(fit + self.chol.log_det() + T::of(n as f64) * ln_2pi) / T::of(2.0)
    }

    /// Latent posterior mean (centered scale) and variance at `x`.
    pub fn predict(&self, inputs: &[Vec<T>], x: &[T]) -> (T, T) {
        let mut kstar: Vec<T> = inputs.iter().map(|xi| self.kernel.covariance(xi, x)).collect();
        let mean: T = kstar.iter().zip(&self.alpha).map(|(a, b)| *a * *b).sum();
        self.chol.solve_lower_in_place(&mut kstar);
        let explained: T = kstar.iter().map(|v| *v * *v).sum();
        let var = (self.kernel.signal_variance - explained).max(T::zero());
        (mean, var)
    }
}

/// Log evidence of the raw outputs of `training` under `theta` (no centering).
pub fn log_marginal_likelihood<T: Scalar>(
    training: &TrainingSet<T>,
    theta: &KernelSpec<T>,
) -> Result<T> {
    let gp = ConditionedGp::fit(training.inputs(), training.outputs(), theta.clone())?;
    Ok(gp.log_marginal_likelihood(training.outputs()))
}
