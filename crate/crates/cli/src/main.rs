//! `histmatch` command-line tool: run experiments, materialize test
//! problems and summarize metric histories.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use histmatch::criteria::CriterionId;
use histmatch::orchestrator::{
    read_metrics_csv, run_replications, run_sampler_only, write_metrics_csv, ExperimentConfig,
    OutputConfig, RunCheckpoint, RunOptions, SimulatorConfig,
};
use histmatch::report::{build_report, write_quartiles_csv, write_trends_csv};
use histmatch::emulator::KernelFamily;
use histmatch::nroy::Objective;
use histmatch::testbed::{franke, make_random_function, torus_implausibility, TorusObjective};
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Parser)]
#[command(name = "histmatch", version, about = "History matching with Bayesian GP emulators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a JSON config.
    Run {
        config: PathBuf,
        /// Overrides the master seed in the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Continue from a checkpoint written by an earlier run.
        #[arg(long)]
        resume: Option<PathBuf>,
        #[arg(long, default_value = "histmatch-out")]
        out: PathBuf,
        /// Worker threads.
        #[arg(long, env = "HM_JOBS")]
        jobs: Option<usize>,
    },
    /// Write a test problem and a ready-to-run config.
    Testbed {
        #[arg(long, value_enum)]
        problem: Problem,
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Summarize a metrics CSV into quartile tables and median trends.
    Report {
        metrics: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Problem {
    Franke,
    Torus,
    Random,
}

/// Usage and configuration problems exit with 2, runtime failures with 1.
enum Failure {
    Usage(String),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(e.into())
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn classify(e: histmatch::Error) -> Failure {
    match e {
        histmatch::Error::InvalidInput(m) => usage(format!("invalid configuration: {m}")),
        other => Failure::Runtime(other.into()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            config,
            seed,
            resume,
            out,
            jobs,
        } => cmd_run(&config, seed, resume.as_deref(), &out, jobs),
        Command::Testbed {
            problem,
            dim,
            seed,
            out,
        } => cmd_testbed(problem, dim, seed, &out),
        Command::Report { metrics, out } => cmd_report(&metrics, &out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn load_config(path: &Path) -> Result<ExperimentConfig, Failure> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(|e| usage(format!("{e:#}")))?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    let config: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let field = e.path().to_string();
        usage(format!("config field `{field}`: {}", e.inner()))
    })?;
    Ok(config)
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    config_sha256: String,
    seed: u64,
    config: &'a ExperimentConfig,
    outputs: Vec<String>,
    failures: Vec<String>,
}

fn config_hash(config: &ExperimentConfig) -> anyhow::Result<String> {
    let bytes = serde_json::to_vec(config)?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn cmd_run(
    config_path: &Path,
    seed: Option<u64>,
    resume: Option<&Path>,
    out: &Path,
    jobs: Option<usize>,
) -> Result<(), Failure> {
    let mut config = load_config(config_path)?;
    if let Some(s) = seed {
        config.seed = s;
    }
    config.validate_shape().map_err(classify)?;
    if let Some(n) = jobs {
        if n == 0 {
            return Err(usage("--jobs must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring worker threads")?;
    }
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;

    let mut manifest = Manifest {
        tool: "histmatch",
        version: env!("CARGO_PKG_VERSION"),
        config_sha256: config_hash(&config)?,
        seed: config.seed,
        config: &config,
        outputs: Vec::new(),
        failures: Vec::new(),
    };

    if config.is_sampler_only() {
        if resume.is_some() {
            return Err(usage("--resume does not apply to sampler-only runs"));
        }
        let levels = run_sampler_only(&config).map_err(classify)?;
        let file = fs::File::create(out.join("nroy_levels.csv"))?;
        levels.write_csv(file).map_err(|e| Failure::Runtime(e.into()))?;
        manifest.outputs.push("nroy_levels.csv".into());
        write_json(&out.join("manifest.json"), &manifest)?;
        let last = levels.final_level();
        println!(
            "{} levels, final beta {}, final max g {:.4}",
            levels.levels.len(),
            last.beta,
            last.max_objective()
        );
        return Ok(());
    }

    let resume = match resume {
        Some(p) => Some(
            RunCheckpoint::load(p)
                .map_err(|e| usage(format!("cannot resume from {}: {e}", p.display())))?,
        ),
        None => None,
    };
    let options = RunOptions {
        checkpoint_dir: Some(out.join("checkpoints")),
        resume,
    };
    let outcome = run_replications(&config, options).map_err(classify)?;
    let file = fs::File::create(out.join("metrics.csv"))?;
    write_metrics_csv(&outcome.rows, file).map_err(|e| Failure::Runtime(e.into()))?;
    manifest.outputs = vec!["metrics.csv".into(), "checkpoints".into()];
    manifest.failures = outcome
        .failures()
        .into_iter()
        .map(|(rep, crit, wave, msg)| format!("replication {rep}, {crit}, wave {wave}: {msg}"))
        .collect();
    write_json(&out.join("manifest.json"), &manifest)?;
    println!("{} metric rows written to {}", outcome.rows.len(), out.join("metrics.csv").display());
    if !manifest.failures.is_empty() {
        for f in &manifest.failures {
            eprintln!("failed: {f}");
        }
        return Err(Failure::Runtime(anyhow::anyhow!(
            "{} replication(s) failed",
            manifest.failures.len()
        )));
    }
    Ok(())
}

fn write_rows(path: &Path, header: &[String], rows: &[Vec<f64>]) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r.iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

fn grid(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> + Clone {
    (0..n).map(move |i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
}

fn cmd_testbed(problem: Problem, dim: Option<usize>, seed: u64, out: &Path) -> Result<(), Failure> {
    let fixed = |name: &str, d: usize| match dim {
        Some(x) if x != d => Err(usage(format!("{name} is defined only for --dim {d}, got {x}"))),
        _ => Ok(()),
    };
    match problem {
        Problem::Franke => fixed("franke", 2)?,
        Problem::Torus => fixed("torus", 3)?,
        Problem::Random => {
            if dim.is_none() {
                return Err(usage("random problems need --dim"));
            }
        }
    }
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let names = |d: usize| -> Vec<String> { (1..=d).map(|i| format!("x{i}")).collect() };

    let config = match problem {
        Problem::Franke => {
            let mut rows = Vec::new();
            for x1 in grid(0.0, 1.0, 101) {
                for x2 in grid(0.0, 1.0, 101) {
                    rows.push(vec![x1, x2, franke(&[x1, x2]).map_err(|e| Failure::Runtime(e.into()))?]);
                }
            }
            let mut header = names(2);
            header.push("f".into());
            write_rows(&out.join("probe_grid.csv"), &header, &rows)?;
            let mut c = ExperimentConfig::new(
                SimulatorConfig::Franke,
                vec![OutputConfig {
                    id: "f".into(),
                    z: Some(0.6),
                    var_md: 0.0,
                    var_me: 1e-4,
                    k: 3.0,
                }],
            );
            c.initial_design_size = Some(20);
            c.batch_size = Some(10);
            c.criteria = CriterionId::ALL.to_vec();
            c.use_stopping_rule = false;
            c.seed = seed;
            c
        }
        Problem::Torus => {
            let g = TorusObjective::<f64>::default();
            let mut rows = Vec::new();
            for x1 in grid(-1.0, 5.0, 121) {
                for x2 in grid(-1.0, 5.0, 121) {
                    let x = [x1, x2, 0.0];
                    let i = torus_implausibility(&x).map_err(|e| Failure::Runtime(e.into()))?;
                    rows.push(vec![x1, x2, 0.0, i, g.value(&x)]);
                }
            }
            let mut header = names(3);
            header.extend(["implausibility".to_string(), "g".to_string()]);
            write_rows(&out.join("probe_grid.csv"), &header, &rows)?;
            let mut c = ExperimentConfig::new(SimulatorConfig::Torus, Vec::new());
            c.seed = seed;
            c
        }
        Problem::Random => {
            let d = dim.expect("checked above");
            let mut c = ExperimentConfig::new(
                SimulatorConfig::RandomFunction {
                    dim: d,
                    n_seeds: None,
                    lengthscale_box: (0.0, 2.0),
                    signal_sd: 10.0,
                    target_quantile: 0.95,
                },
                vec![OutputConfig {
                    id: "y".into(),
                    z: None,
                    var_md: 0.0,
                    var_me: 0.01,
                    k: 3.0,
                }],
            );
            c.criteria = CriterionId::ALL.to_vec();
            c.use_stopping_rule = false;
            c.emulator.prior.family = KernelFamily::Matern52;
            c.seed = seed;
            c.validate_shape().map_err(classify)?;
            // The function replication 0 of that config is matched against.
            let spec = c.random_function_spec(0).expect("random function config");
            let f = make_random_function::<f64>(&spec).map_err(|e| Failure::Runtime(e.into()))?;
            let rows: Vec<Vec<f64>> = f
                .seeds()
                .iter()
                .zip(f.seed_values())
                .map(|(x, y)| x.iter().copied().chain(std::iter::once(*y)).collect())
                .collect();
            let mut header = names(d);
            header.push("f".into());
            write_rows(&out.join("seeds.csv"), &header, &rows)?;
            write_json(
                &out.join("function.json"),
                &serde_json::json!({
                    "dim": d,
                    "function_seed": spec.seed,
                    "lengthscales": f.lengthscales(),
                    "signal_sd": spec.signal_sd,
                    "target_quantile": spec.target_quantile,
                    "target": f.target(),
                }),
            )?;
            c
        }
    };
    write_json(&out.join("config.json"), &config)?;
    println!("wrote {}", out.display());
    Ok(())
}

fn cmd_report(metrics: &Path, out: &Path) -> Result<(), Failure> {
    let file = fs::File::open(metrics)
        .with_context(|| format!("opening {}", metrics.display()))?;
    let rows = read_metrics_csv(file).map_err(|e| usage(format!("{}: {e}", metrics.display())))?;
    let report = build_report(&rows);
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    write_quartiles_csv(&report, fs::File::create(out.join("quartiles.csv"))?)
        .map_err(|e| Failure::Runtime(e.into()))?;
    write_trends_csv(&report, fs::File::create(out.join("trends.csv"))?)
        .map_err(|e| Failure::Runtime(e.into()))?;
    println!(
        "{} quartile rows, {} trend points",
        report.quartiles.len(),
        report.trends.len()
    );
    Ok(())
}
