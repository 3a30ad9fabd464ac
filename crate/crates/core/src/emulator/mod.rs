//! Fully Bayesian GP emulator: training data, kernels, hyperparameter
//! posterior sampling and mixture predictions.

mod gp;
mod kernel;
mod mixture;
mod posterior;
mod training;

pub use gp::{log_marginal_likelihood, ConditionedGp};
pub use kernel::{KernelFamily, KernelSpec};
pub use mixture::{mixture_moments, MixtureComponent, PredictiveMixture};
pub use posterior::{
    sample_hyperposterior, sample_hyperposterior_with, ChainSettings, HyperPrior, HyperSample,
    PosteriorEnsemble,
};
pub use training::TrainingSet;
