//! End-to-end history-matching waves and the replication harness.

mod config;
mod design;
mod run;
mod wave;

pub use config::{BoxConfig, EmulatorConfig, ExperimentConfig, OutputConfig, SimulatorConfig};
pub use design::{initial_design, latin_hypercube};
pub use run::{
    checkpoint_path, collect_rows, load_archive, read_metrics_csv, run_replications,
    run_sampler_only, write_metrics_csv, MetricRow, RunCheckpoint, RunOptions, RunOutcome,
    CHECKPOINT_VERSION, METRICS_HEADER,
};
pub use wave::{
    run_wave, stopping_rule, BoundSimulator, ReplicationContext, ReplicationState, RunStatus,
    WaveRecord, WaveState,
};
