//! Independent oracles shared by the integration tests.

#![allow(dead_code)]

use std::collections::BTreeMap;

use histmatch::criteria::CriterionId;
use histmatch::orchestrator::{ExperimentConfig, MetricRow, OutputConfig, SimulatorConfig};
use histmatch::emulator::KernelFamily;

pub fn gauss_pdf(x: f64, m: f64, s: f64) -> f64 {
    let u = (x - m) / s;
    (-0.5 * u * u).exp() / (s * (2.0 * std::f64::consts::PI).sqrt())
}

fn simpson_step(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Adaptive Simpson quadrature of `f` over `[a, b]`. The interval is first
/// split into 64 panels so narrow peaks are not stepped over.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let panels = 64;
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|i| {
            let (lo, hi) = (a + i as f64 * h, a + (i + 1) as f64 * h);
            let (fa, fm, fb) = (f(lo), f(0.5 * (lo + hi)), f(hi));
            let whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
            simpson_step(&f, lo, hi, fa, fm, fb, whole, tol / panels as f64, 40)
        })
        .sum()
}

/// Sample mean and its standard error.
pub fn mean_se(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (mut n, mut mean, mut m2) = (0.0f64, 0.0f64, 0.0f64);
    for v in values {
        n += 1.0;
        let d = v - mean;
        mean += d / n;
        m2 += d * (v - mean);
    }
    (mean, (m2 / (n - 1.0) / n).sqrt())
}

pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Median over replications of a metric, keyed by (criterion, wave).
pub fn wave_medians(
    rows: &[MetricRow],
    metric: impl Fn(&MetricRow) -> f64,
) -> BTreeMap<(CriterionId, usize), f64> {
    let mut groups: BTreeMap<(CriterionId, usize), Vec<f64>> = BTreeMap::new();
    for r in rows {
        groups.entry((r.criterion, r.wave)).or_default().push(metric(r));
    }
    groups
        .into_iter()
        .map(|(k, mut v)| (k, median(&mut v)))
        .collect()
}

/// Franke at z = 0.6: 20-point initial design, batches of 10, entropic
/// criterion, ten replications of three waves.
pub fn franke_experiment(seed: u64) -> ExperimentConfig {
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
    c.n_waves = 3;
    c.replications = 10;
    c.criteria = vec![CriterionId::Entropy];
    c.use_stopping_rule = false;
    c.seed = seed;
    c
}

/// Random GP-prior functions in `dim` dimensions matched at their 95%
/// quantile, with default design sizes and a Matern-5/2 emulator.
pub fn random_function_experiment(dim: usize, seed: u64) -> ExperimentConfig {
    let mut c = ExperimentConfig::new(
        SimulatorConfig::RandomFunction {
            dim,
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
    c.n_waves = 3;
    c.replications = 10;
    c.criteria = vec![CriterionId::Eci, CriterionId::Risk, CriterionId::Entropy];
    c.emulator.prior.family = KernelFamily::Matern52;
    c.use_stopping_rule = false;
    c.seed = seed;
    c
}
