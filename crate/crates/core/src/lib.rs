//! History matching with fully Bayesian Gaussian-process emulators.
//!
//! The numerical core is generic over the floating-point type through
//! [`Scalar`]; the aliases at the crate root fix it to `f64`, which is what
//! the orchestrator and command-line tool use.

pub mod batch;
pub mod criteria;
pub mod emulator;
pub mod error;
pub mod implausibility;
pub mod linalg;
pub mod nroy;
pub mod orchestrator;
pub mod report;
pub mod scalar;
pub mod scoring;
pub mod seed;
pub mod special;
pub mod testbed;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type TrainingSet = emulator::TrainingSet<f64>;
pub type KernelSpec = emulator::KernelSpec<f64>;
pub type HyperPrior = emulator::HyperPrior<f64>;
pub type PosteriorEnsemble = emulator::PosteriorEnsemble<f64>;
pub type PredictiveMixture = emulator::PredictiveMixture<f64>;
pub type UncertaintyBudget = implausibility::UncertaintyBudget<f64>;
pub type TargetDatum = implausibility::TargetDatum<f64>;
pub type SearchBox = nroy::SearchBox<f64>;
pub type NroyLevels = nroy::NroyLevels<f64>;
pub type RankedSample = criteria::RankedSample<f64>;
pub type OutputMetrics = scoring::OutputMetrics<f64>;
pub type RandomFunction = testbed::RandomFunction<f64>;
pub type TabulatedSimulator = testbed::TabulatedSimulator<f64>;
