use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, SimulatorConfig};
use super::wave::{run_wave, stopping_rule, ReplicationContext, ReplicationState, RunStatus};
use crate::criteria::CriterionId;
use crate::error::{invalid, Error, Result};
use crate::nroy::{sample_nroy, AnnealingConfig, NroyLevels, SearchBox};
use crate::testbed::{torus_box, TabulatedSimulator, TorusObjective};

pub const METRICS_HEADER: [&str; 6] = [
    "replication",
    "wave",
    "criterion",
    "output",
    "max_error",
    "median_crps",
];

pub const CHECKPOINT_VERSION: u32 = 1;

/// One line of the metric history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub replication: usize,
    pub wave: usize,
    pub criterion: CriterionId,
    pub output: String,
    pub max_error: f64,
    pub median_crps: f64,
}

pub fn write_metrics_csv<W: Write>(rows: &[MetricRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(METRICS_HEADER)?;
    for r in rows {
        w.write_record([
            r.replication.to_string(),
            r.wave.to_string(),
            r.criterion.to_string(),
            r.output.clone(),
            r.max_error.to_string(),
            r.median_crps.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a metric history, rejecting files whose header differs from
/// [`METRICS_HEADER`].
pub fn read_metrics_csv<R: Read>(reader: R) -> Result<Vec<MetricRow>> {
    let mut r = csv::Reader::from_reader(reader);
    let header = r.headers()?.clone();
    if header.iter().map(str::trim).ne(METRICS_HEADER.iter().copied()) {
        return Err(invalid(format!(
            "metrics header must be {}, got {}",
            METRICS_HEADER.join(","),
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let bad = |what: &str| invalid(format!("metrics row {}: bad {what}", i + 1));
        if rec.len() != METRICS_HEADER.len() {
            return Err(bad("field count"));
        }
        rows.push(MetricRow {
            replication: rec[0].trim().parse().map_err(|_| bad("replication"))?,
            wave: rec[1].trim().parse().map_err(|_| bad("wave"))?,
            criterion: rec[2].trim().parse().map_err(|_| bad("criterion"))?,
            output: rec[3].trim().to_string(),
            max_error: rec[4].trim().parse().map_err(|_| bad("max_error"))?,
            median_crps: rec[5].trim().parse().map_err(|_| bad("median_crps"))?,
        });
    }
    Ok(rows)
}

/// Resumable snapshot written after every wave.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunCheckpoint {
    pub version: u32,
    pub config: ExperimentConfig,
    pub completed_waves: usize,
    pub states: Vec<ReplicationState>,
}

impl RunCheckpoint {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cp: Self = serde_json::from_str(&text)?;
        if cp.version != CHECKPOINT_VERSION {
            return Err(invalid(format!(
                "checkpoint version {} is not supported (expected {CHECKPOINT_VERSION})",
                cp.version
            )));
        }
        Ok(cp)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let tmp = path.with_extension("json.tmp");
        std::fs::write(&tmp, serde_json::to_vec(self)?)?;
        std::fs::rename(tmp, path)?;
        Ok(())
    }
}

pub fn checkpoint_path(dir: &Path, wave: usize) -> PathBuf {
    dir.join(format!("wave_{wave}.json"))
}

#[derive(Debug, Default)]
pub struct RunOptions {
    /// Directory for per-wave checkpoints; none are written when unset.
    pub checkpoint_dir: Option<PathBuf>,
    pub resume: Option<RunCheckpoint>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub states: Vec<ReplicationState>,
    pub rows: Vec<MetricRow>,
}

impl RunOutcome {
    /// `(replication, criterion, wave, message)` for every failed run.
    pub fn failures(&self) -> Vec<(usize, CriterionId, usize, String)> {
        self.states
            .iter()
            .filter_map(|s| match &s.status {
                RunStatus::Failed { wave, message } => {
                    Some((s.replication, s.criterion, *wave, message.clone()))
                }
                _ => None,
            })
            .collect()
    }
}

pub fn load_archive(config: &ExperimentConfig) -> Result<Option<Arc<TabulatedSimulator<f64>>>> {
    match &config.simulator {
        SimulatorConfig::Tabulated {
            path,
            interpolation,
        } => Ok(Some(Arc::new(TabulatedSimulator::load(path, *interpolation)?))),
        _ => Ok(None),
    }
}

/// Metric rows of all states, ordered by replication, wave, criterion (in
/// config order) and output.
pub fn collect_rows(config: &ExperimentConfig, states: &[ReplicationState]) -> Vec<MetricRow> {
    let crit_index = |c: CriterionId| config.criteria.iter().position(|x| *x == c).unwrap_or(usize::MAX);
    let mut rows = Vec::new();
    for s in states {
        for w in &s.waves {
            for (o, m) in w.metrics.iter().enumerate() {
                rows.push((
                    (s.replication, w.wave, crit_index(s.criterion), o),
                    MetricRow {
                        replication: s.replication,
                        wave: w.wave,
                        criterion: s.criterion,
                        output: m.output_id.clone(),
                        max_error: m.max_predicted_error,
                        median_crps: m.median_crps,
                    },
                ));
            }
        }
    }
    rows.sort_by(|a, b| a.0.cmp(&b.0));
    rows.into_iter().map(|r| r.1).collect()
}

fn fail(state: &mut ReplicationState, wave: usize, err: &Error) {
    let message = match err {
        Error::FlatObjective => format!("empty NROY space: {err}"),
        other => other.to_string(),
    };
    state.status = RunStatus::Failed { wave, message };
}

/// Runs every (replication, criterion) pair wave by wave. Replications run
/// concurrently; a failing replication is recorded and the rest continue.
/// Because every random stream is derived from the master seed, a resumed
/// run reproduces an uninterrupted one exactly.
pub fn run_replications(config: &ExperimentConfig, options: RunOptions) -> Result<RunOutcome> {
    config.validate_shape()?;
    if config.is_sampler_only() {
        return Err(invalid("sampler-only configurations have no waves; use run_sampler_only"));
    }
    let archive = load_archive(config)?;
    let contexts: Vec<std::result::Result<ReplicationContext, String>> = (0..config.replications)
        .into_par_iter()
        .map(|r| ReplicationContext::build(config, r, archive.as_ref()).map_err(|e| e.to_string()))
        .collect();
    // Shape errors (bad output names, box dimension) hit every replication
    // alike and are configuration errors rather than replication failures.
    if let Some(Err(msg)) = contexts.first() {
        if contexts.iter().all(|c| c.as_ref().err() == Some(msg)) && !msg.contains("factorization") {
            return Err(invalid(msg.clone()));
        }
    }

    let (mut states, start) = match options.resume {
        Some(cp) => {
            if cp.config != *config {
                return Err(invalid("checkpoint was written for a different configuration"));
            }
            (cp.states, cp.completed_waves + 1)
        }
        None => {
            let pairs: Vec<(usize, CriterionId)> = (0..config.replications)
                .flat_map(|r| config.criteria.iter().map(move |c| (r, *c)))
                .collect();
            let states = pairs
                .into_par_iter()
                .map(|(r, c)| match &contexts[r] {
                    Ok(ctx) => ReplicationState::initialize(ctx, config, c).unwrap_or_else(|e| {
                        failed_state(r, c, 0, e.to_string())
                    }),
                    Err(msg) => failed_state(r, c, 0, msg.clone()),
                })
                .collect();
            (states, 1)
        }
    };

    if let Some(dir) = &options.checkpoint_dir {
        std::fs::create_dir_all(dir)?;
    }
    for wave in start..=config.n_waves {
        states.par_iter_mut().filter(|s| s.is_running()).for_each(|s| {
            let Ok(ctx) = &contexts[s.replication] else {
                return;
            };
            match run_wave(s, ctx, config) {
                Ok(ws) => {
                    if stopping_rule(&ws.record.metrics, &ctx.budgets, wave, config.n_waves) {
                        let reason = if wave >= config.n_waves {
                            "wave cap reached".to_string()
                        } else if config.use_stopping_rule {
                            "maximum predicted error within discrepancy budget".to_string()
                        } else {
                            return;
                        };
                        s.status = RunStatus::Stopped { reason };
                    }
                }
                Err(e) => fail(s, wave, &e),
            }
        });
        if let Some(dir) = &options.checkpoint_dir {
            RunCheckpoint {
                version: CHECKPOINT_VERSION,
                config: config.clone(),
                completed_waves: wave,
                states: states.clone(),
            }
            .save(&checkpoint_path(dir, wave))?;
        }
    }
    let rows = collect_rows(config, &states);
    Ok(RunOutcome { states, rows })
}

fn failed_state(replication: usize, criterion: CriterionId, wave: usize, message: String) -> ReplicationState {
    ReplicationState {
        replication,
        criterion,
        inputs: Vec::new(),
        outputs: Vec::new(),
        waves: Vec::new(),
        status: RunStatus::Failed { wave, message },
    }
}

/// Runs the annealed sampler directly on the torus implausibility.
pub fn run_sampler_only(config: &ExperimentConfig) -> Result<NroyLevels<f64>> {
    if !config.is_sampler_only() {
        return Err(invalid("simulator: only the torus problem runs in sampler-only mode"));
    }
    let bbox = match &config.input_box {
        Some(b) => SearchBox::new(b.lower.clone(), b.upper.clone())?,
        None => torus_box(),
    };
    if bbox.dim() != 3 {
        return Err(invalid("input_box: the torus problem has 3 inputs"));
    }
    let k = config.outputs.first().map_or(3.0, |o| o.k);
    let annealing = AnnealingConfig {
        seed: config.seed,
        ..config.annealing
    };
    sample_nroy(&TorusObjective { k }, &bbox, &annealing)
}
