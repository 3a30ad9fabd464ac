//! Deterministic and probabilistic implausibility, including the
//! second-maximum measure for multi-output simulators.

use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::emulator::PredictiveMixture;
use crate::error::{invalid, Error, Result};
use crate::scalar::Scalar;
use crate::seed::rng_from;
use crate::special::{log_norm_interval, norm_cdf};

/// Model-discrepancy and measurement-error variances plus the cutoff `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct UncertaintyBudget<T> {
    pub var_md: T,
    pub var_me: T,
    #[serde(default = "default_k")]
    pub k: T,
}

fn default_k<T: Scalar>() -> T {
    T::of(3.0)
}

impl<T: Scalar> Default for UncertaintyBudget<T> {
    fn default() -> Self {
        Self {
            var_md: T::zero(),
            var_me: T::zero(),
            k: default_k(),
        }
    }
}

impl<T: Scalar> UncertaintyBudget<T> {
    pub fn new(var_md: T, var_me: T, k: T) -> Result<Self> {
        let b = Self { var_md, var_me, k };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.var_md >= T::zero()) || !(self.var_me >= T::zero()) {
            return Err(invalid("discrepancy and measurement variances must be nonnegative"));
        }
        if !(self.k > T::zero() && self.k.is_finite()) {
            return Err(invalid(format!("threshold k must be positive, got {}", self.k)));
        }
        Ok(())
    }

    /// `σ²_md + σ²_me`.
    pub fn external_variance(&self) -> T {
        self.var_md + self.var_me
    }

    /// `v = √(σ² + σ²_md + σ²_me)`.
    pub fn total_sd(&self, emulator_variance: T) -> T {
        (emulator_variance + self.external_variance()).sqrt()
    }
}

/// Observed value for one simulator output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct TargetDatum<T> {
    pub z: T,
    pub output_id: String,
}

impl<T: Scalar> TargetDatum<T> {
    pub fn new(z: T, output_id: impl Into<String>) -> Result<Self> {
        if !z.is_finite() {
            return Err(invalid(format!("target must be finite, got {z}")));
        }
        Ok(Self {
            z,
            output_id: output_id.into(),
        })
    }
}

/// `|z − m| / √(σ² + σ²_md + σ²_me)`.
pub fn implausibility_pointwise<T: Scalar>(
    mean: T,
    variance: T,
    budget: &UncertaintyBudget<T>,
    target: &TargetDatum<T>,
) -> Result<T> {
    let v = budget.total_sd(variance);
    if !(v > T::zero()) {
        return Err(Error::DegenerateVariance);
    }
    Ok((target.z - mean).abs() / v)
}

/// `P{I_GP(x) ≤ k}` under the mixture, averaged component by component.
pub fn prob_nonimplausible<T: Scalar>(
    mix: &PredictiveMixture<T>,
    budget: &UncertaintyBudget<T>,
    target: &TargetDatum<T>,
) -> Result<T> {
    let mut p = T::zero();
    for c in mix.components() {
        let v = budget.total_sd(c.variance);
        let sd = c.sd();
        let half = budget.k * v;
        let offset = target.z - c.mean;
        let term = if sd > T::zero() {
            norm_cdf((offset + half) / sd) - norm_cdf((offset - half) / sd)
        } else if v > T::zero() {
            if offset.abs() <= half {
                T::one()
            } else {
                T::zero()
            }
        } else {
            return Err(Error::DegenerateVariance);
        };
        p = p + c.weight * term;
    }
    Ok(p.max(T::zero()).min(T::one()))
}

/// Natural log of [`prob_nonimplausible`], accurate when the probability is
/// far below the smallest representable positive value.
pub fn log_prob_nonimplausible<T: Scalar>(
    mix: &PredictiveMixture<T>,
    budget: &UncertaintyBudget<T>,
    target: &TargetDatum<T>,
) -> Result<T> {
    let mut terms = Vec::with_capacity(mix.len());
    for c in mix.components() {
        let v = budget.total_sd(c.variance);
        let sd = c.sd();
        let half = budget.k * v;
        let offset = target.z - c.mean;
        let log_term = if sd > T::zero() {
            log_norm_interval((offset - half) / sd, (offset + half) / sd)
        } else if v > T::zero() {
            if offset.abs() <= half {
                T::zero()
            } else {
                T::neg_infinity()
            }
        } else {
            return Err(Error::DegenerateVariance);
        };
        terms.push(c.weight.ln() + log_term);
    }
    let max = terms.iter().copied().fold(T::neg_infinity(), T::max);
    if max == T::neg_infinity() {
        return Ok(max);
    }
    let s: T = terms.iter().map(|t| (*t - max).exp()).sum();
    Ok((max + s.ln()).min(T::zero()))
}

/// Second-largest entry of the per-output implausibilities.
pub fn second_max_implausibility<T: Scalar>(values: &[T]) -> Result<T> {
    if values.len() < 2 {
        return Err(Error::Arity {
            expected: 2,
            got: values.len(),
        });
    }
    let (mut first, mut second) = (T::neg_infinity(), T::neg_infinity());
    for &v in values {
        if v > first {
            second = first;
            first = v;
        } else if v > second {
            second = v;
        }
    }
    Ok(second)
}

/// Monte Carlo estimate of `P{I⁽²⁾(x) ≤ k}` plus an audit of the draws.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecondMaxEstimate<T> {
    pub probability: T,
    pub draws: usize,
    /// Draws where the second-largest implausibility exceeded the largest.
    pub order_violations: usize,
}

/// Common random numbers for the probabilistic second-maximum measure.
/// Reusing one table across inputs makes the estimate a deterministic
/// function of the emulator predictions.
#[derive(Debug, Clone)]
pub struct SecondMaxSampler {
    n_outputs: usize,
    /// `(component selector in [0,1), standard normal)` per draw and output.
    table: Vec<(f64, f64)>,
}

impl SecondMaxSampler {
    pub fn new(n_outputs: usize, n_draws: usize, seed: u64) -> Result<Self> {
        if n_outputs < 2 {
            return Err(Error::Arity {
                expected: 2,
                got: n_outputs,
            });
        }
        if n_draws == 0 {
            return Err(invalid("n_draws must be at least 1"));
        }
        let mut rng = rng_from(seed, &[]);
        let table = (0..n_draws * n_outputs)
            .map(|_| (rng.gen::<f64>(), rng.sample::<f64, _>(StandardNormal)))
            .collect();
        Ok(Self { n_outputs, table })
    }

    pub fn n_draws(&self) -> usize {
        self.table.len() / self.n_outputs
    }

    pub fn estimate<T: Scalar>(
        &self,
        mixes: &[PredictiveMixture<T>],
        budgets: &[UncertaintyBudget<T>],
        targets: &[TargetDatum<T>],
    ) -> Result<SecondMaxEstimate<T>> {
        let q = self.n_outputs;
        if mixes.len() != q || budgets.len() != q || targets.len() != q {
            return Err(Error::Arity {
                expected: q,
                got: mixes.len().min(budgets.len()).min(targets.len()),
            });
        }
        let k = budgets[0].k;
        if budgets.iter().any(|b| b.k != k) {
            return Err(invalid("all outputs must share the threshold k"));
        }
        let mut values = vec![T::zero(); q];
        let mut inside = 0usize;
        let mut violations = 0usize;
        for draw in self.table.chunks_exact(q) {
            for (i, &(u, eps)) in draw.iter().enumerate() {
                let comps = mixes[i].components();
                let mut acc = 0.0;
                let mut c = comps[comps.len() - 1];
                for cand in comps {
                    acc += cand.weight.as_f64();
                    if u < acc {
                        c = *cand;
                        break;
                    }
                }
                let v = budgets[i].total_sd(c.variance);
                if !(v > T::zero()) {
                    return Err(Error::DegenerateVariance);
                }
                let f = c.mean + c.sd() * T::of(eps);
                values[i] = (targets[i].z - f).abs() / v;
            }
            let first = values.iter().copied().fold(T::neg_infinity(), T::max);
            let second = second_max_implausibility(&values)?;
            if second > first {
                violations += 1;
            }
            if second <= k {
                inside += 1;
            }
        }
        let draws = self.n_draws();
        Ok(SecondMaxEstimate {
            probability: T::of(inside as f64 / draws as f64),
            draws,
            order_violations: violations,
        })
    }
}

/// `P{I⁽²⁾(x) ≤ k}` under independent per-output emulator draws.
pub fn prob_second_max_nonimplausible<T: Scalar>(
    mixes: &[PredictiveMixture<T>],
    budgets: &[UncertaintyBudget<T>],
    targets: &[TargetDatum<T>],
    n_draws: usize,
    seed: u64,
) -> Result<T> {
    let sampler = SecondMaxSampler::new(mixes.len(), n_draws, seed)?;
    Ok(sampler.estimate(mixes, budgets, targets)?.probability)
}
