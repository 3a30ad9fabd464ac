use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, SimulatorConfig};
use super::design::latin_hypercube;
use crate::batch::{select_batch, Selection, SelectionConfig};
use crate::criteria::{rank_by_scores, score_mixture, CriterionId, RankedSample};
use crate::emulator::{sample_hyperposterior_with, PosteriorEnsemble, PredictiveMixture, TrainingSet};
use crate::error::{invalid, Error, Result};
use crate::implausibility::{log_prob_nonimplausible, SecondMaxSampler, TargetDatum, UncertaintyBudget};
use crate::nroy::{empty_nroy_check, sample_nroy, AnnealingConfig, LogFnObjective, NroyLevels, SearchBox};
use crate::scoring::{metrics_from_predictions, OutputMetrics};
use crate::seed::{derive_seed, label};
use crate::testbed::{
    franke, make_random_function, RandomFunction, TabulatedSimulator,
};

/// A simulator instantiated for one replication.
#[derive(Debug, Clone)]
pub enum BoundSimulator {
    Franke,
    Random(Box<RandomFunction<f64>>),
    /// Shared archive plus the column indices of the configured outputs.
    Tabulated(Arc<TabulatedSimulator<f64>>, Vec<usize>),
}

impl BoundSimulator {
    /// Runs the simulator at native input `x`. Returns the input actually
    /// used (archives snap to their nearest stored run) and the outputs.
    pub fn run(&self, x: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        match self {
            BoundSimulator::Franke => Ok((x.to_vec(), vec![franke(x)?])),
            BoundSimulator::Random(f) => Ok((x.to_vec(), vec![f.eval(x)?])),
            BoundSimulator::Tabulated(sim, cols) => {
                let y = sim.eval(x)?;
                let row = sim.nearest_index(x);
                Ok((sim.inputs()[row].clone(), cols.iter().map(|&c| y[c]).collect()))
            }
        }
    }
}

/// Everything about a replication that stays fixed across waves.
#[derive(Debug, Clone)]
pub struct ReplicationContext {
    pub replication: usize,
    pub simulator: BoundSimulator,
    /// Native input box; emulators and the sampler work on its unit cube.
    pub bbox: SearchBox<f64>,
    pub targets: Vec<TargetDatum<f64>>,
    pub budgets: Vec<UncertaintyBudget<f64>>,
    pub initial_design_size: usize,
    pub batch_size: usize,
}

impl ReplicationContext {
    pub fn build(
        config: &ExperimentConfig,
        replication: usize,
        archive: Option<&Arc<TabulatedSimulator<f64>>>,
    ) -> Result<Self> {
        let rep = replication as u64;
        let (simulator, default_box, default_z) = match &config.simulator {
            SimulatorConfig::Franke => (BoundSimulator::Franke, SearchBox::unit(2), None),
            SimulatorConfig::RandomFunction { dim, .. } => {
                let spec = config
                    .random_function_spec(rep)
                    .expect("simulator is a random function");
                let f = make_random_function::<f64>(&spec)?;
                let z = f.target();
                (BoundSimulator::Random(Box::new(f)), SearchBox::unit(*dim), Some(z))
            }
            SimulatorConfig::Tabulated { .. } => {
                let sim = archive.ok_or_else(|| invalid("tabulated simulator was not loaded"))?;
                let names = sim.output_names();
                let cols = config
                    .outputs
                    .iter()
                    .map(|o| {
                        names.iter().position(|n| *n == o.id).ok_or_else(|| {
                            invalid(format!("outputs: archive has no output column '{}'", o.id))
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                let (lo, hi) = sim.input_box();
                let bbox = SearchBox::new(lo, hi)
                    .map_err(|e| invalid(format!("archive inputs span an empty box: {e}")))?;
                (BoundSimulator::Tabulated(Arc::clone(sim), cols), bbox, None)
            }
            SimulatorConfig::Torus => {
                return Err(invalid("the torus problem is sampler-only and has no simulator outputs"))
            }
        };
        let bbox = match &config.input_box {
            Some(b) => SearchBox::new(b.lower.clone(), b.upper.clone())?,
            None => default_box.clone(),
        };
        let d = bbox.dim();
        if d != default_box.dim() {
            return Err(invalid(format!(
                "input_box: simulator takes {} inputs, box has {d}",
                default_box.dim()
            )));
        }
        let mut targets = Vec::new();
        let mut budgets = Vec::new();
        for (i, o) in config.outputs.iter().enumerate() {
            let z = o
                .z
                .or(default_z)
                .ok_or_else(|| invalid(format!("outputs[{i}].z: an observed value is required")))?;
            targets.push(TargetDatum::new(z, o.id.clone())?);
            budgets.push(UncertaintyBudget::new(o.var_md, o.var_me, o.k)?);
        }
        let initial_design_size = config.initial_design_size.unwrap_or(10 * d);
        if initial_design_size < d + 1 {
            return Err(invalid(format!(
                "initial_design_size: need at least {} points for {d} inputs",
                d + 1
            )));
        }
        Ok(Self {
            replication,
            simulator,
            bbox,
            targets,
            budgets,
            initial_design_size,
            batch_size: config.batch_size.unwrap_or(5 * d),
        })
    }

    pub fn n_outputs(&self) -> usize {
        self.targets.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RunStatus {
    Running,
    /// Finished normally: wave cap reached or stopping rule satisfied.
    Stopped { reason: String },
    Failed { wave: usize, message: String },
}

/// Serializable summary of one completed wave.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveRecord {
    pub wave: usize,
    /// Training runs used to fit this wave's emulators.
    pub training_size: usize,
    pub metrics: Vec<OutputMetrics<f64>>,
    /// Selected inputs in native units.
    pub batch: Vec<Vec<f64>>,
    pub n_levels: usize,
    pub final_beta: f64,
    pub final_max_objective: f64,
    pub n_candidates: usize,
    /// Final level never reached probability one half.
    pub empty_nroy: bool,
    pub second_max_draws: usize,
    pub order_violations: usize,
    pub warnings: Vec<String>,
    pub elapsed_ms: u64,
}

/// Cumulative state of one (replication, criterion) run. Training inputs
/// are stored on the unit cube of the input box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationState {
    pub replication: usize,
    pub criterion: CriterionId,
    pub inputs: Vec<Vec<f64>>,
    pub outputs: Vec<Vec<f64>>,
    pub waves: Vec<WaveRecord>,
    pub status: RunStatus,
}

impl ReplicationState {
    /// Evaluates the initial Latin hypercube. The design depends only on the
    /// master seed and replication, so every criterion starts from the same
    /// runs.
    pub fn initialize(
        ctx: &ReplicationContext,
        config: &ExperimentConfig,
        criterion: CriterionId,
    ) -> Result<Self> {
        let seed = derive_seed(config.seed, &[label::DESIGN, ctx.replication as u64]);
        let design = latin_hypercube::<f64>(ctx.bbox.dim(), ctx.initial_design_size, seed);
        let mut state = Self {
            replication: ctx.replication,
            criterion,
            inputs: Vec::with_capacity(design.len()),
            outputs: Vec::with_capacity(design.len()),
            waves: Vec::new(),
            status: RunStatus::Running,
        };
        for u in design {
            state.evaluate(ctx, &u)?;
        }
        Ok(state)
    }

    fn evaluate(&mut self, ctx: &ReplicationContext, u: &[f64]) -> Result<()> {
        let (x_used, y) = ctx.simulator.run(&ctx.bbox.to_native(u))?;
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Simulator(format!("non-finite output {y:?} at {x_used:?}")));
        }
        let u_used = ctx
            .bbox
            .to_unit(&x_used)
            .into_iter()
            .map(|v| v.clamp(0.0, 1.0))
            .collect();
        self.inputs.push(u_used);
        self.outputs.push(y);
        Ok(())
    }

    pub fn training_set(&self, output: usize) -> Result<TrainingSet<f64>> {
        TrainingSet::new(
            self.inputs.clone(),
            self.outputs.iter().map(|y| y[output]).collect(),
        )
    }

    pub fn is_running(&self) -> bool {
        self.status == RunStatus::Running
    }
}

/// In-memory result of a wave, including the fitted emulators and samples.
#[derive(Debug, Clone)]
pub struct WaveState {
    pub record: WaveRecord,
    pub ensembles: Vec<PosteriorEnsemble<f64>>,
    pub levels: NroyLevels<f64>,
    pub ranked: Vec<RankedSample<f64>>,
    pub selection: Selection<f64>,
}

/// True iff every output's maximum predicted error is within
/// `√(σ²_md + σ²_me)` or the wave cap is reached.
pub fn stopping_rule(
    metrics: &[OutputMetrics<f64>],
    budgets: &[UncertaintyBudget<f64>],
    wave_index: usize,
    n_waves: usize,
) -> bool {
    if wave_index >= n_waves {
        return true;
    }
    !metrics.is_empty()
        && metrics
            .iter()
            .zip(budgets)
            .all(|(m, b)| m.max_predicted_error <= b.external_variance().sqrt())
}

fn wave_seed(config: &ExperimentConfig, ctx: &ReplicationContext, wave: usize, path: &[u64]) -> u64 {
    let mut full = vec![label::REPLICATION, ctx.replication as u64, wave as u64];
    full.extend_from_slice(path);
    derive_seed(config.seed, &full)
}

/// Scores every candidate. With several outputs each output's scores are
/// divided by their maximum and averaged.
fn candidate_scores(
    criterion: CriterionId,
    predictions: &[Vec<PredictiveMixture<f64>>],
    ctx: &ReplicationContext,
    config: &ExperimentConfig,
) -> Result<Vec<f64>> {
    let n = predictions[0].len();
    if criterion == CriterionId::Lhs {
        return Ok(vec![1.0; n]);
    }
    let per_output = predictions
        .iter()
        .enumerate()
        .map(|(o, preds)| {
            preds
                .par_iter()
                .map(|m| {
                    score_mixture(
                        criterion,
                        m,
                        &ctx.budgets[o],
                        ctx.targets[o].z,
                        &config.criterion_options,
                    )
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    if per_output.len() == 1 {
        return Ok(per_output.into_iter().next().expect("one output"));
    }
    let q = per_output.len() as f64;
    let mut total = vec![0.0; n];
    for scores in &per_output {
        let max = scores.iter().copied().fold(0.0, f64::max);
        if max > 0.0 {
            for (t, s) in total.iter_mut().zip(scores) {
                *t += s / max / q;
            }
        }
    }
    Ok(total)
}

/// One wave: fit → sample NROY → rank → cutoff → maximin → evaluate →
/// augment. `state` is only modified when the wave succeeds.
pub fn run_wave(
    state: &mut ReplicationState,
    ctx: &ReplicationContext,
    config: &ExperimentConfig,
) -> Result<WaveState> {
    let started = Instant::now();
    let wave = state.waves.len() + 1;
    let q = ctx.n_outputs();
    let d = ctx.bbox.dim();

    let ensembles = (0..q)
        .into_par_iter()
        .map(|o| {
            let training = state.training_set(o)?;
            sample_hyperposterior_with(
                &training,
                &config.emulator.prior,
                &config.emulator.chain,
                config.emulator.n_samples,
                wave_seed(config, ctx, wave, &[label::FIT, o as u64]),
            )
        })
        .collect::<Result<Vec<_>>>()?;

    let annealing = AnnealingConfig {
        seed: wave_seed(config, ctx, wave, &[label::NROY]),
        ..config.annealing
    };
    let unit = SearchBox::unit(d);
    let draws = AtomicUsize::new(0);
    let violations = AtomicUsize::new(0);
    let levels = if q == 1 {
        let (e, b, t) = (&ensembles[0], &ctx.budgets[0], &ctx.targets[0]);
        let objective = LogFnObjective(|x: &[f64]| log_prob_nonimplausible(&e.predict(x), b, t).unwrap_or(f64::NAN));
        sample_nroy(&objective, &unit, &annealing)
    } else {
        let sampler = SecondMaxSampler::new(
            q,
            config.second_max_draws,
            wave_seed(config, ctx, wave, &[label::SECOND_MAX]),
        )?;
        let objective = LogFnObjective(|x: &[f64]| {
            let mixes: Vec<_> = ensembles.iter().map(|e| e.predict(x)).collect();
            match sampler.estimate(&mixes, &ctx.budgets, &ctx.targets) {
                Ok(est) => {
                    draws.fetch_add(est.draws, Ordering::Relaxed);
                    violations.fetch_add(est.order_violations, Ordering::Relaxed);
                    est.probability.ln()
                }
                Err(_) => f64::NAN,
            }
        });
        sample_nroy(&objective, &unit, &annealing)
    }?;

    let final_level = levels.final_level();
    let mut candidates = final_level.points.clone();
    if config.include_penultimate_level && final_level.objective_iqr() < config.annealing.iqr_tolerance {
        if let Some(prev) = levels.penultimate_level() {
            candidates.extend(prev.points.iter().cloned());
        }
    }

    let predictions: Vec<Vec<PredictiveMixture<f64>>> = ensembles
        .iter()
        .map(|e| final_level.points.par_iter().map(|x| e.predict(x)).collect())
        .collect();
    let metrics = predictions
        .iter()
        .zip(&ctx.targets)
        .map(|(p, t)| metrics_from_predictions(p, t))
        .collect::<Result<Vec<_>>>()?;

    let candidate_predictions: Vec<Vec<PredictiveMixture<f64>>> = if candidates.len() == final_level.points.len() {
        predictions
    } else {
        ensembles
            .iter()
            .map(|e| candidates.par_iter().map(|x| e.predict(x)).collect())
            .collect()
    };
    let scores = candidate_scores(state.criterion, &candidate_predictions, ctx, config)?;
    let n_candidates = candidates.len();
    let ranked = rank_by_scores(state.criterion, candidates, scores);
    let selection = select_batch(
        &ranked,
        &state.inputs,
        &SelectionConfig::new(config.cutoff_alpha, ctx.batch_size)?,
    )?;

    let mut next = state.clone();
    for u in &selection.batch {
        next.evaluate(ctx, u)?;
    }
    let record = WaveRecord {
        wave,
        training_size: state.inputs.len(),
        metrics,
        batch: selection.batch.iter().map(|u| ctx.bbox.to_native(u)).collect(),
        n_levels: levels.levels.len(),
        final_beta: final_level.beta,
        final_max_objective: final_level.max_objective(),
        n_candidates,
        empty_nroy: empty_nroy_check(&levels, 0.5),
        second_max_draws: draws.into_inner(),
        order_violations: violations.into_inner(),
        warnings: selection.warnings.clone(),
        elapsed_ms: started.elapsed().as_millis() as u64,
    };
    next.waves.push(record.clone());
    *state = next;
    Ok(WaveState {
        record,
        ensembles,
        levels,
        ranked,
        selection,
    })
}
