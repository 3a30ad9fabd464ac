use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::criteria::{CriterionId, CriterionOptions};
use crate::emulator::{ChainSettings, HyperPrior};
use crate::error::{invalid, Result};
use crate::nroy::AnnealingConfig;
use crate::seed::{derive_seed, label};
use crate::testbed::{Interpolation, RandomFunctionSpec};

/// Which simulator a run drives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SimulatorConfig {
    Franke,
    /// A fresh GP-prior function per replication, seeded from the master
    /// seed and the replication index.
    RandomFunction {
        dim: usize,
        #[serde(default)]
        n_seeds: Option<usize>,
        #[serde(default = "default_lengthscale_box")]
        lengthscale_box: (f64, f64),
        #[serde(default = "default_signal_sd")]
        signal_sd: f64,
        #[serde(default = "default_target_quantile")]
        target_quantile: f64,
    },
    Tabulated {
        path: PathBuf,
        #[serde(default)]
        interpolation: Interpolation,
    },
    /// Sampler-only problem: the torus implausibility needs no emulator.
    Torus,
}

fn default_lengthscale_box() -> (f64, f64) {
    (0.0, 2.0)
}
fn default_signal_sd() -> f64 {
    10.0
}
fn default_target_quantile() -> f64 {
    0.95
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxConfig {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

/// Observation and uncertainty budget for one simulator output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub id: String,
    /// Observed value. Random functions default to their own target level.
    #[serde(default)]
    pub z: Option<f64>,
    #[serde(default)]
    pub var_md: f64,
    #[serde(default)]
    pub var_me: f64,
    #[serde(default = "default_k")]
    pub k: f64,
}

fn default_k() -> f64 {
    3.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmulatorConfig {
    /// Hyperparameter draws per ensemble.
    pub n_samples: usize,
    pub chain: ChainSettings,
    pub prior: HyperPrior<f64>,
}

impl Default for EmulatorConfig {
    fn default() -> Self {
        Self {
            n_samples: 20,
            chain: ChainSettings::default(),
            prior: HyperPrior::default(),
        }
    }
}

/// Complete description of a history-matching experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub simulator: SimulatorConfig,
    /// Native input bounds; defaults to the simulator's own domain.
    #[serde(default)]
    pub input_box: Option<BoxConfig>,
    #[serde(default)]
    pub outputs: Vec<OutputConfig>,
    /// Defaults to `10·d`.
    #[serde(default)]
    pub initial_design_size: Option<usize>,
    /// Defaults to `5·d`.
    #[serde(default)]
    pub batch_size: Option<usize>,
    #[serde(default = "default_waves")]
    pub n_waves: usize,
    #[serde(default = "default_criteria")]
    pub criteria: Vec<CriterionId>,
    #[serde(default)]
    pub criterion_options: CriterionOptions,
    #[serde(default = "default_alpha")]
    pub cutoff_alpha: f64,
    #[serde(default)]
    pub annealing: AnnealingConfig,
    #[serde(default)]
    pub emulator: EmulatorConfig,
    /// Add the penultimate annealing level to the candidates when the final
    /// level has collapsed (objective IQR below the annealing tolerance).
    #[serde(default)]
    pub include_penultimate_level: bool,
    /// Monte Carlo draws for the multi-output second-maximum objective.
    #[serde(default = "default_second_max_draws")]
    pub second_max_draws: usize,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default)]
    pub seed: u64,
    /// Stop a replication early once every output's maximum predicted
    /// error is within its discrepancy-plus-measurement standard deviation.
    #[serde(default = "default_true")]
    pub use_stopping_rule: bool,
}

fn default_waves() -> usize {
    3
}
fn default_criteria() -> Vec<CriterionId> {
    vec![CriterionId::Entropy]
}
fn default_alpha() -> f64 {
    0.5
}
fn default_second_max_draws() -> usize {
    2048
}
fn default_replications() -> usize {
    1
}
fn default_true() -> bool {
    true
}

impl ExperimentConfig {
    /// Minimal config with defaults for everything but the simulator and
    /// outputs.
    pub fn new(simulator: SimulatorConfig, outputs: Vec<OutputConfig>) -> Self {
        Self {
            simulator,
            input_box: None,
            outputs,
            initial_design_size: None,
            batch_size: None,
            n_waves: default_waves(),
            criteria: default_criteria(),
            criterion_options: CriterionOptions::default(),
            cutoff_alpha: default_alpha(),
            annealing: AnnealingConfig::default(),
            emulator: EmulatorConfig::default(),
            include_penultimate_level: false,
            second_max_draws: default_second_max_draws(),
            replications: default_replications(),
            seed: 0,
            use_stopping_rule: true,
        }
    }

    /// Protocol of the fault-model study: 60 initial runs, 30 per wave.
    pub fn multi_output_preset(simulator: SimulatorConfig, outputs: Vec<OutputConfig>) -> Self {
        Self {
            initial_design_size: Some(60),
            batch_size: Some(30),
            ..Self::new(simulator, outputs)
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate_shape()?;
        Ok(cfg)
    }

    pub fn is_sampler_only(&self) -> bool {
        matches!(self.simulator, SimulatorConfig::Torus)
    }

    /// The random function replication `rep` is matched against, if the
    /// simulator is a random function.
    pub fn random_function_spec(&self, rep: u64) -> Option<RandomFunctionSpec> {
        match &self.simulator {
            SimulatorConfig::RandomFunction {
                dim,
                n_seeds,
                lengthscale_box,
                signal_sd,
                target_quantile,
            } => Some(RandomFunctionSpec {
                dim: *dim,
                seed: derive_seed(self.seed, &[label::FUNCTION, rep]),
                n_seeds: *n_seeds,
                lengthscale_box: *lengthscale_box,
                signal_sd: *signal_sd,
                target_quantile: *target_quantile,
            }),
            _ => None,
        }
    }

    /// Checks that do not need the simulator to be built.
    pub fn validate_shape(&self) -> Result<()> {
        if !self.is_sampler_only() && self.outputs.is_empty() {
            return Err(invalid("outputs: at least one output is required"));
        }
        for (i, o) in self.outputs.iter().enumerate() {
            if !(o.var_md >= 0.0 && o.var_me >= 0.0) {
                return Err(invalid(format!("outputs[{i}]: variances must be nonnegative")));
            }
            if !(o.k > 0.0 && o.k.is_finite()) {
                return Err(invalid(format!("outputs[{i}].k: must be positive")));
            }
        }
        if self.outputs.len() > 1 && self.outputs.iter().any(|o| o.k != self.outputs[0].k) {
            return Err(invalid("outputs: all outputs must share the same k"));
        }
        if self.criteria.is_empty() {
            return Err(invalid("criteria: at least one criterion is required"));
        }
        if self.n_waves == 0 {
            return Err(invalid("n_waves: must be at least 1"));
        }
        if self.replications == 0 {
            return Err(invalid("replications: must be at least 1"));
        }
        if self.batch_size == Some(0) {
            return Err(invalid("batch_size: must be at least 1"));
        }
        if !(self.cutoff_alpha > 0.0 && self.cutoff_alpha <= 1.0) {
            return Err(invalid("cutoff_alpha: must lie in (0, 1]"));
        }
        if self.emulator.n_samples == 0 {
            return Err(invalid("emulator.n_samples: must be at least 1"));
        }
        if self.second_max_draws == 0 {
            return Err(invalid("second_max_draws: must be at least 1"));
        }
        self.annealing
            .validate()
            .map_err(|e| invalid(format!("annealing: {e}")))?;
        self.emulator
            .prior
            .validate()
            .map_err(|e| invalid(format!("emulator.prior: {e}")))?;
        if let SimulatorConfig::RandomFunction { dim, .. } = self.simulator {
            if dim == 0 {
                return Err(invalid("simulator.dim: must be at least 1"));
            }
            if self.outputs.len() != 1 {
                return Err(invalid("outputs: random functions have exactly one output"));
            }
        }
        if matches!(self.simulator, SimulatorConfig::Franke) && self.outputs.len() != 1 {
            return Err(invalid("outputs: Franke's function has exactly one output"));
        }
        if let Some(b) = &self.input_box {
            crate::nroy::SearchBox::new(b.lower.clone(), b.upper.clone())
                .map_err(|e| invalid(format!("input_box: {e}")))?;
        }
        Ok(())
    }
}
