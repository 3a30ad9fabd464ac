//! Fully Bayesian treatment of the GP hyperparameters: an adaptive
//! random-walk Metropolis chain over log-lengthscales and log signal
//! variance, thinned into an equally weighted ensemble.

use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::Cholesky;
use crate::scalar::Scalar;
use crate::seed::{rng_from, Rng};

use super::gp::ConditionedGp;
use super::kernel::{KernelFamily, KernelSpec};
use super::mixture::{MixtureComponent, PredictiveMixture};
use super::training::TrainingSet;

/// Independent log-normal priors on the lengthscales and signal variance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar", default)]
pub struct HyperPrior<T> {
    pub family: KernelFamily,
    pub lengthscale_median: T,
    pub lengthscale_log_sd: T,
    /// `None` uses the sample variance of the training outputs.
    pub signal_median: Option<T>,
    pub signal_log_sd: T,
    pub nugget: T,
}

impl<T: Scalar> Default for HyperPrior<T> {
    fn default() -> Self {
        Self {
            family: KernelFamily::SquaredExponential,
            lengthscale_median: T::of(0.5),
            lengthscale_log_sd: T::one(),
            signal_median: None,
            signal_log_sd: T::one(),
            nugget: T::of(1e-8),
        }
    }
}

impl<T: Scalar> HyperPrior<T> {
    pub fn validate(&self) -> Result<()> {
        let pos = |v: T| v > T::zero() && v.is_finite();
        if !pos(self.lengthscale_median) || !pos(self.lengthscale_log_sd) || !pos(self.signal_log_sd) {
            return Err(invalid("hyperprior medians and log-sds must be positive"));
        }
        if let Some(m) = self.signal_median {
            if !pos(m) {
                return Err(invalid("signal median must be positive"));
            }
        }
        if !(self.nugget >= T::zero()) {
            return Err(invalid("nugget must be nonnegative"));
        }
        Ok(())
    }
}

/// Length and thinning of the hyperparameter chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChainSettings {
    pub burn_in: usize,
    pub thin: usize,
}

impl Default for ChainSettings {
    fn default() -> Self {
        Self {
            burn_in: 1000,
            thin: 10,
        }
    }
}

/// One posterior draw θᵢ with its weight and conditioned GP.
#[derive(Debug, Clone)]
pub struct HyperSample<T> {
    theta: KernelSpec<T>,
    weight: T,
    gp: ConditionedGp<T>,
}

impl<T: Scalar> HyperSample<T> {
    pub fn theta(&self) -> &KernelSpec<T> {
        &self.theta
    }

    pub fn weight(&self) -> T {
        self.weight
    }

    pub fn gp(&self) -> &ConditionedGp<T> {
        &self.gp
    }
}

/// Equally weighted hyperparameter draws together with the data they were
/// conditioned on. Immutable once built.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(
    into = "EnsembleRecord<T>",
    try_from = "EnsembleRecord<T>",
    bound = "T: Scalar"
)]
pub struct PosteriorEnsemble<T> {
    training: TrainingSet<T>,
    output_mean: T,
    samples: Vec<HyperSample<T>>,
}

#[derive(Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
struct EnsembleRecord<T> {
    training: TrainingSet<T>,
    thetas: Vec<KernelSpec<T>>,
}

impl<T: Scalar> From<PosteriorEnsemble<T>> for EnsembleRecord<T> {
    fn from(e: PosteriorEnsemble<T>) -> Self {
        Self {
            thetas: e.samples.into_iter().map(|s| s.theta).collect(),
            training: e.training,
        }
    }
}

impl<T: Scalar> TryFrom<EnsembleRecord<T>> for PosteriorEnsemble<T> {
    type Error = Error;
    fn try_from(r: EnsembleRecord<T>) -> Result<Self> {
        Self::from_thetas(r.training, r.thetas)
    }
}

fn mean<T: Scalar>(v: &[T]) -> T {
    v.iter().copied().sum::<T>() / T::of(v.len() as f64)
}

impl<T: Scalar> PosteriorEnsemble<T> {
    /// Conditions one GP per hyperparameter vector, with weights `1/N`.
    pub fn from_thetas(training: TrainingSet<T>, thetas: Vec<KernelSpec<T>>) -> Result<Self> {
        if thetas.is_empty() {
            return Err(invalid("ensemble needs at least one hyperparameter sample"));
        }
        let output_mean = mean(training.outputs());
        let centered: Vec<T> = training.outputs().iter().map(|y| *y - output_mean).collect();
        let weight = T::one() / T::of(thetas.len() as f64);
        let samples = thetas
            .into_iter()
            .map(|theta| {
                let gp = ConditionedGp::fit(training.inputs(), &centered, theta.clone())?;
                Ok(HyperSample { theta, weight, gp })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            training,
            output_mean,
            samples,
        })
    }

    pub fn training(&self) -> &TrainingSet<T> {
        &self.training
    }

    pub fn samples(&self) -> &[HyperSample<T>] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Mixture predictive at `x`: one component per hyperparameter draw.
    pub fn predict(&self, x: &[T]) -> PredictiveMixture<T> {
        let components = self
            .samples
            .iter()
            .map(|s| {
                let (m, v) = s.gp.predict(self.training.inputs(), x);
                MixtureComponent {
                    weight: s.weight,
                    mean: m + self.output_mean,
                    variance: v,
                }
            })
            .collect();
        PredictiveMixture::new(components).expect("ensemble weights are normalized")
    }
}

fn sample_variance<T: Scalar>(v: &[T]) -> Option<T> {
    if v.len() < 2 {
        return None;
    }
    let m = mean(v);
    let ss: T = v.iter().map(|y| (*y - m) * (*y - m)).sum();
    let var = ss / T::of((v.len() - 1) as f64);
    (var > T::zero() && var.is_finite()).then_some(var)
}

struct LogPosterior<'a, T> {
    inputs: &'a [Vec<T>],
    centered: Vec<T>,
    prior_mean: Vec<T>,
    prior_sd: Vec<T>,
    family: KernelFamily,
    nugget: T,
}

impl<T: Scalar> LogPosterior<'_, T> {
    fn theta(&self, phi: &[T]) -> KernelSpec<T> {
        let d = phi.len() - 1;
        KernelSpec {
            family: self.family,
            lengthscales: phi[..d].iter().map(|v| v.exp()).collect(),
            signal_variance: phi[d].exp(),
            nugget: self.nugget,
        }
    }

    fn eval(&self, phi: &[T]) -> T {
        let prior: T = phi
            .iter()
            .zip(&self.prior_mean)
            .zip(&self.prior_sd)
            .map(|((p, m), s)| {
                let z = (*p - *m) / *s;
                -z * z / T::of(2.0)
            })
            .sum();
        let theta = self.theta(phi);
        if theta.validate().is_err() {
            return T::neg_infinity();
        }
        match ConditionedGp::fit(self.inputs, &self.centered, theta) {
            Ok(gp) => prior + gp.log_marginal_likelihood(&self.centered),
            Err(_) => T::neg_infinity(),
        }
    }
}

fn std_normal<T: Scalar>(rng: &mut Rng) -> T {
    T::of(rng.sample::<f64, _>(StandardNormal))
}

/// Draws `n_samples` hyperparameter vectors from `p(θ | D)` with the default
/// chain settings.
pub fn sample_hyperposterior<T: Scalar>(
    training: &TrainingSet<T>,
    prior: &HyperPrior<T>,
    n_samples: usize,
    seed: u64,
) -> Result<PosteriorEnsemble<T>> {
    sample_hyperposterior_with(training, prior, &ChainSettings::default(), n_samples, seed)
}

pub fn sample_hyperposterior_with<T: Scalar>(
    training: &TrainingSet<T>,
    prior: &HyperPrior<T>,
    chain: &ChainSettings,
    n_samples: usize,
    seed: u64,
) -> Result<PosteriorEnsemble<T>> {
    if n_samples == 0 {
        return Err(invalid("n_samples must be at least 1"));
    }
    prior.validate()?;
    let thin = chain.thin.max(1);
    let d = training.dim();
    let dim = d + 1;

    let y_mean = mean(training.outputs());
    let signal_median = prior
        .signal_median
        .or_else(|| sample_variance(training.outputs()))
        .unwrap_or_else(T::one);
    let mut prior_mean = vec![prior.lengthscale_median.ln(); d];
    prior_mean.push(signal_median.ln());
    let mut prior_sd = vec![prior.lengthscale_log_sd; d];
    prior_sd.push(prior.signal_log_sd);

    let target = LogPosterior {
        inputs: training.inputs(),
        centered: training.outputs().iter().map(|y| *y - y_mean).collect(),
        prior_mean: prior_mean.clone(),
        prior_sd: prior_sd.clone(),
        family: prior.family,
        nugget: prior.nugget,
    };

    let mut phi = prior_mean;
    let mut lp = target.eval(&phi);
    if !lp.is_finite() {
        return Err(Error::Initialization(format!(
            "log-posterior is {lp} at the prior median"
        )));
    }

    let mut rng = rng_from(seed, &[]);
    // Proposal: λ · L z with L the Cholesky factor of the proposal covariance.
    let mut prop_chol = {
        let mut c = vec![T::zero(); dim * dim];
        for (i, s) in prior_sd.iter().enumerate() {
            c[i * dim + i] = *s * *s * T::of(0.25);
        }
        Cholesky::factor(&c, dim).expect("diagonal proposal is SPD")
    };
    let mut log_scale = T::zero();
    let window = 25usize;
    let mut accepted_in_window = 0usize;
    let mut history: Vec<Vec<T>> = Vec::with_capacity(chain.burn_in);
    let cov_from = chain.burn_in / 4;

    let total = chain.burn_in + n_samples * thin;
    let mut thetas = Vec::with_capacity(n_samples);
    let mut proposal = vec![T::zero(); dim];
    for t in 0..total {
        let z: Vec<T> = (0..dim).map(|_| std_normal(&mut rng)).collect();
        let step = prop_chol.mul_lower(&z);
        let scale = log_scale.exp();
        for i in 0..dim {
            proposal[i] = phi[i] + scale * step[i];
        }
        let lp_new = target.eval(&proposal);
        let u: f64 = rng.gen();
        if lp_new.is_finite() && T::of(u.ln()) < lp_new - lp {
            phi.copy_from_slice(&proposal);
            lp = lp_new;
            accepted_in_window += 1;
        }

        if t < chain.burn_in {
            history.push(phi.clone());
            if (t + 1) % window == 0 {
                let rate = accepted_in_window as f64 / window as f64;
                log_scale = log_scale + T::of(rate - 0.25);
                accepted_in_window = 0;
            }
            // Refresh the proposal shape from the chain's own history.
            if t + 1 >= chain.burn_in / 2 && (t + 1) % 100 == 0 && t + 1 - cov_from >= 50 {
                if let Some(ch) = empirical_covariance_chol(&history[cov_from..], dim) {
                    prop_chol = ch;
                    log_scale = T::of(2.38 / (dim as f64).sqrt()).ln();
                }
            }
        } else if (t - chain.burn_in + 1) % thin == 0 {
            thetas.push(target.theta(&phi));
        }
    }
    PosteriorEnsemble::from_thetas(training.clone(), thetas)
}

fn empirical_covariance_chol<T: Scalar>(rows: &[Vec<T>], dim: usize) -> Option<Cholesky<T>> {
    let n = T::of(rows.len() as f64);
    let mu: Vec<T> = (0..dim)
        .map(|j| rows.iter().map(|r| r[j]).sum::<T>() / n)
        .collect();
    let mut c = vec![T::zero(); dim * dim];
    for r in rows {
        for i in 0..dim {
            for j in 0..=i {
                c[i * dim + j] = c[i * dim + j] + (r[i] - mu[i]) * (r[j] - mu[j]);
            }
        }
    }
    for i in 0..dim {
        for j in 0..=i {
            let v = c[i * dim + j] / (n - T::one()).max(T::one());
            c[i * dim + j] = v;
            c[j * dim + i] = v;
        }
        c[i * dim + i] = c[i * dim + i] + T::of(1e-6);
    }
    Cholesky::factor(&c, dim)
}
