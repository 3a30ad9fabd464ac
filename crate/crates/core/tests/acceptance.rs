//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
//! the process exits non-zero if any fails. Pass criterion names such as
//! `ac3 ac7` to run a subset.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use histmatch::batch::{select_batch, SelectionConfig};
use histmatch::criteria::{
    entropic_profile, eci, expected_risk, rank_by_scores, CriterionId, CriterionInput,
};
use histmatch::emulator::{
    mixture_moments, sample_hyperposterior, ConditionedGp, HyperPrior, KernelFamily, KernelSpec,
    MixtureComponent, PredictiveMixture, TrainingSet,
};
use histmatch::implausibility::{prob_nonimplausible, TargetDatum, UncertaintyBudget};
use histmatch::nroy::{sample_nroy, AnnealingConfig};
use histmatch::orchestrator::{
    latin_hypercube, run_replications, write_metrics_csv, ExperimentConfig, OutputConfig,
    RunOptions, RunOutcome, SimulatorConfig,
};
use histmatch::scoring::crps_mixture;
use histmatch::testbed::{franke, torus_box, Interpolation, TabulatedSimulator, TorusObjective};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use common::{gauss_pdf, integrate, mean_se, random_function_experiment, wave_medians};

const MASTER_SEED: u64 = 2024;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn std_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

fn budget(var_md: f64, var_me: f64, k: f64) -> UncertaintyBudget<f64> {
    UncertaintyBudget::new(var_md, var_me, k).unwrap()
}

/// Quadrature of the criteria's defining integrals under `N(m, σ²)`.
fn eci_oracle(m: f64, s: f64, z: f64, eps: f64) -> f64 {
    integrate(|f| (eps * eps - (f - z).powi(2)) * gauss_pdf(f, m, s), z - eps, z + eps, 1e-11)
}

fn risk_oracle(m: f64, s: f64, z: f64) -> f64 {
    if m <= z {
        integrate(|f| (f - z) * gauss_pdf(f, m, s), z, z.max(m) + 40.0 * s, 1e-11)
    } else {
        integrate(|f| (z - f) * gauss_pdf(f, m, s), z.min(m) - 40.0 * s, z, 1e-11)
    }
}

fn neg_log_density(f: f64, m: f64, s: f64) -> f64 {
    let u = (f - m) / s;
    0.5 * u * u + (s * (2.0 * std::f64::consts::PI).sqrt()).ln()
}

fn entropy_oracle(m: f64, s: f64, z: f64, k: f64) -> f64 {
    integrate(
        |f| neg_log_density(f, m, s) * gauss_pdf(f, m, s),
        z - k * s,
        z + k * s,
        1e-11,
    )
    .abs()
}

fn ac1() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    let mut mc_fail = Vec::new();
    let mut unresolved = 0;
    for i in 0..200 {
        let m = rng.gen_range(-3.0..3.0);
        let s = rng.gen_range(0.05..3.0);
        let z = rng.gen_range(-3.0..3.0);
        let k = rng.gen_range(1.0..4.0);
        let b = budget(rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0), k);
        let input = CriterionInput {
            mean: m,
            sigma: s,
            budget: b,
            z,
        };
        let eps = k * (s * s + b.var_md + b.var_me).sqrt();
        let got = [
            eci(&input).unwrap().value,
            expected_risk(&input).unwrap().value,
            entropic_profile(&input).unwrap().value,
        ];
        let quad = [eci_oracle(m, s, z, eps), risk_oracle(m, s, z), entropy_oracle(m, s, z, k)];
        for (g, q) in got.iter().zip(&quad) {
            worst = worst.max((g - q).abs());
        }
        // Monte Carlo at 10^7 draws on the first 20 configurations.
        if i < 20 {
            let draws: Vec<f64> = (0..10_000_000)
                .map(|_| m + s * rng.sample::<f64, _>(StandardNormal))
                .collect();
            let (e, e_se) = mean_se(draws.iter().map(|f| (eps * eps - (f - z).powi(2)).max(0.0)));
            let (r, r_se) = mean_se(draws.iter().map(|f| {
                if m <= z {
                    (f - z).max(0.0)
                } else {
                    (z - f).max(0.0)
                }
            }));
            let (h, h_se) = mean_se(draws.iter().map(|&f| {
                if (f - z).abs() <= k * s {
                    neg_log_density(f, m, s)
                } else {
                    0.0
                }
            }));
            for (name, g, est, se) in [
                ("eci", got[0], e, e_se),
                ("risk", got[1], r, r_se),
                ("entropy", got[2], h.abs(), h_se),
            ] {
                // With no draw inside the integrand's support the standard
                // error is zero and the comparison is undefined; quadrature
                // still covers that case.
                if se == 0.0 {
                    unresolved += 1;
                } else if (g - est).abs() > 3.0 * se {
                    mc_fail.push(format!("{name}@{i}: {g} vs {est}±{se:.2e}"));
                }
            }
        }
    }
    verdict(
        worst <= 1e-8 && mc_fail.is_empty(),
        format!(
            "max |closed form - quadrature| = {worst:.2e}; Monte Carlo misses {mc_fail:?}, {unresolved} comparisons with no draws in support"
        ),
    )
}

fn ac2() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    let mut sides = [0usize; 3];
    for i in 0..150 {
        let s = rng.gen_range(0.05..3.0);
        let z = rng.gen_range(-3.0..3.0);
        let m = match i % 3 {
            0 => z - rng.gen_range(0.0..4.0) * s,
            1 => z + rng.gen_range(1e-9..4.0) * s,
            _ => z,
        };
        let input = CriterionInput {
            mean: m,
            sigma: s,
            budget: budget(0.0, 0.0, 3.0),
            z,
        };
        let got = expected_risk(&input).unwrap().value;
        let branch = if m <= z {
            sides[0] += 1;
            integrate(|f| (f - z) * gauss_pdf(f, m, s), z, z + 40.0 * s, 1e-11)
        } else {
            sides[1] += 1;
            integrate(|f| (z - f) * gauss_pdf(f, m, s), z - 40.0 * s, z, 1e-11)
        };
        if m == z {
            sides[2] += 1;
        }
        worst = worst.max((got - branch).abs());
    }
    verdict(
        worst <= 1e-8,
        format!(
            "max deviation {worst:.2e} over {} cases with m <= z ({} at m = z) and {} with m > z",
            sides[0], sides[2], sides[1]
        ),
    )
}

fn ac3() -> Verdict {
    let single: f64 = crps_mixture(&PredictiveMixture::single(0.0, 1.0).unwrap(), 0.0);
    let integral = integrate(|y| std_cdf(y).powi(2), -40.0, 0.0, 1e-12)
        + integrate(|y| (std_cdf(y) - 1.0).powi(2), 0.0, 40.0, 1e-12);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut misses = Vec::new();
    for i in 0..50 {
        let n = rng.gen_range(1..=5);
        let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let comps: Vec<MixtureComponent<f64>> = raw
            .iter()
            .map(|w| MixtureComponent {
                weight: w / total,
                mean: rng.gen_range(-2.0..2.0),
                variance: rng.gen_range(0.01..2.0),
            })
            .collect();
        let mix = PredictiveMixture::new(comps.clone()).unwrap();
        let z = rng.gen_range(-2.0..2.0);
        let got = crps_mixture(&mix, z);
        let draw = |rng: &mut ChaCha8Rng| {
            let u: f64 = rng.gen();
            let mut acc = 0.0;
            let mut c = comps[n - 1];
            for cand in &comps {
                acc += cand.weight;
                if u < acc {
                    c = *cand;
                    break;
                }
            }
            c.mean + c.variance.sqrt() * rng.sample::<f64, _>(StandardNormal)
        };
        // E|X - z| - E|X - X'| / 2 from independent pairs.
        let values: Vec<f64> = (0..200_000)
            .map(|_| {
                let (x, x2) = (draw(&mut rng), draw(&mut rng));
                (x - z).abs() - 0.5 * (x - x2).abs()
            })
            .collect();
        let (est, se) = mean_se(values.into_iter());
        if (got - est).abs() > 3.0 * se {
            misses.push(format!("#{i}: {got} vs {est}±{se:.2e}"));
        }
    }
    let pass = (single - 0.233694).abs() <= 1e-6 && (single - integral).abs() <= 1e-6 && misses.is_empty();
    verdict(
        pass,
        format!("CRPS(N(0,1), 0) = {single:.7} (integral {integral:.7}); sample estimator misses {misses:?}"),
    )
}

fn ac4() -> Verdict {
    let zero = budget(0.0, 0.0, 3.0);
    let band: f64 = prob_nonimplausible(
        &PredictiveMixture::single(0.0, 1.0).unwrap(),
        &zero,
        &TargetDatum::new(0.0, "y").unwrap(),
    )
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut misses = Vec::new();
    for i in 0..50 {
        let n = rng.gen_range(1..=4);
        let comps: Vec<MixtureComponent<f64>> = (0..n)
            .map(|_| MixtureComponent {
                weight: 1.0 / n as f64,
                mean: rng.gen_range(-3.0..3.0),
                variance: rng.gen_range(0.01..4.0),
            })
            .collect();
        let mix = PredictiveMixture::new(comps.clone()).unwrap();
        let b = budget(rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0), rng.gen_range(1.0..4.0));
        let z = rng.gen_range(-3.0..3.0);
        let got = prob_nonimplausible(&mix, &b, &TargetDatum::new(z, "y").unwrap()).unwrap();
        // Indicator of I_GP <= k for draws of f_GP from the mixture.
        let hits = (0..200_000).map(|_| {
            let c = comps[rng.gen_range(0..n)];
            let f = c.mean + c.variance.sqrt() * rng.sample::<f64, _>(StandardNormal);
            let i_gp = (z - f).abs() / (c.variance + b.var_md + b.var_me).sqrt();
            if i_gp <= b.k {
                1.0
            } else {
                0.0
            }
        });
        let (est, se) = mean_se(hits);
        if (got - est).abs() > 3.0 * se.max(1e-12) {
            misses.push(format!("#{i}: {got} vs {est}±{se:.2e}"));
        }
    }
    verdict(
        (band - 0.997300).abs() <= 1e-4 && misses.is_empty(),
        format!("P(I <= 3) at m = z, unit sd: {band:.6}; Monte Carlo misses {misses:?}"),
    )
}

fn ac5() -> Verdict {
    let inputs: Vec<Vec<f64>> = latin_hypercube(2, 15, 5);
    let y: Vec<f64> = inputs.iter().map(|x| franke(x).unwrap()).collect();
    let kernel = KernelSpec::new(KernelFamily::SquaredExponential, vec![0.25, 0.3], 0.2, 0.0).unwrap();
    let gp = ConditionedGp::fit(&inputs, &y, kernel).unwrap();
    let (mut mean_err, mut max_var): (f64, f64) = (0.0, 0.0);
    for (x, yi) in inputs.iter().zip(&y) {
        let (m, v) = gp.predict(&inputs, x);
        mean_err = mean_err.max((m - yi).abs());
        max_var = max_var.max(v.abs());
    }

    let training = TrainingSet::new(inputs.clone(), y).unwrap();
    let ensemble = sample_hyperposterior(&training, &HyperPrior::default(), 20, 7).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut misses = Vec::new();
    for i in 0..10 {
        let x = vec![rng.gen::<f64>(), rng.gen::<f64>()];
        let mix = ensemble.predict(&x);
        let (mean, var) = mixture_moments(&mix);
        let comps = mix.components();
        let draws: Vec<f64> = (0..1_000_000)
            .map(|_| {
                let c = comps[rng.gen_range(0..comps.len())];
                c.mean + c.variance.sqrt() * rng.sample::<f64, _>(StandardNormal)
            })
            .collect();
        let (m_hat, m_se) = mean_se(draws.iter().copied());
        let (v_hat, v_se) = mean_se(draws.iter().map(|f| (f - m_hat).powi(2)));
        if (mean - m_hat).abs() > 3.0 * m_se {
            misses.push(format!("mean@{i}: {mean} vs {m_hat}±{m_se:.2e}"));
        }
        if (var - v_hat).abs() > 3.0 * v_se {
            misses.push(format!("variance@{i}: {var} vs {v_hat}±{v_se:.2e}"));
        }
    }
    verdict(
        mean_err <= 1e-8 && max_var <= 1e-8 && misses.is_empty(),
        format!(
            "interpolation error {mean_err:.1e}, variance at training points {max_var:.1e}, jitter {:.1e}; mixture moment misses {misses:?}",
            gp.jitter()
        ),
    )
}

/// Connected components of the graph joining points closer than `radius`.
fn single_linkage_clusters(points: &[Vec<f64>], radius: f64) -> usize {
    let n = points.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn root(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    let r2 = radius * radius;
    for i in 0..n {
        for j in 0..i {
            let d2: f64 = points[i].iter().zip(&points[j]).map(|(a, b)| (a - b).powi(2)).sum();
            if d2 <= r2 {
                let (a, b) = (root(&mut parent, i), root(&mut parent, j));
                parent[a] = b;
            }
        }
    }
    (0..n).filter(|&i| root(&mut parent, i) == i).count()
}

fn ac6() -> Verdict {
    let start = Instant::now();
    let counts: Vec<usize> = (0..20)
        .map(|seed| {
            let config = AnnealingConfig {
                n_per_level: 1000,
                seed,
                ..AnnealingConfig::default()
            };
            let levels = sample_nroy(&TorusObjective::default(), &torus_box(), &config).unwrap();
            single_linkage_clusters(&levels.final_level().points, 0.5)
        })
        .collect();
    let elapsed = start.elapsed();
    let four = counts.iter().filter(|&&c| c == 4).count();
    verdict(
        four >= 18 && elapsed < Duration::from_secs(120),
        format!("{four}/20 runs with exactly 4 clusters {counts:?} in {:.1}s", elapsed.as_secs_f64()),
    )
}

fn metrics_bytes(outcome: &RunOutcome) -> Vec<u8> {
    let mut buf = Vec::new();
    write_metrics_csv(&outcome.rows, &mut buf).unwrap();
    buf
}

fn franke_run() -> (RunOutcome, Duration) {
    let start = Instant::now();
    let outcome = run_replications(&common::franke_experiment(MASTER_SEED), RunOptions::default()).unwrap();
    (outcome, start.elapsed())
}

fn ac7() -> Verdict {
    let (outcome, elapsed) = franke_run();
    let err = wave_medians(&outcome.rows, |r| r.max_error);
    let crps = wave_medians(&outcome.rows, |r| r.median_crps);
    let e: Vec<f64> = (1..=3).map(|w| err[&(CriterionId::Entropy, w)]).collect();
    let c: Vec<f64> = (1..=3).map(|w| crps[&(CriterionId::Entropy, w)]).collect();
    let pass = outcome.failures().is_empty()
        && e[0] > e[1]
        && e[1] > e[2]
        && c[2] <= c[0]
        && elapsed < Duration::from_secs(15 * 60);
    verdict(
        pass,
        format!(
            "median max error {:.4} > {:.4} > {:.4}, median CRPS w1 {:.5} w3 {:.5}, {:.0}s",
            e[0], e[1], e[2], c[0], c[2], elapsed.as_secs_f64()
        ),
    )
}

fn ac8() -> Verdict {
    let start = Instant::now();
    let mut pass = true;
    let mut lines = Vec::new();
    for dim in [2, 3] {
        let outcome =
            run_replications(&random_function_experiment(dim, MASTER_SEED), RunOptions::default()).unwrap();
        pass &= outcome.failures().is_empty();
        let med = wave_medians(&outcome.rows, |r| r.max_error);
        for criterion in [CriterionId::Eci, CriterionId::Entropy, CriterionId::Risk] {
            let v: Vec<f64> = (1..=3).map(|w| med[&(criterion, w)]).collect();
            let ok = match criterion {
                CriterionId::Risk => v[1] <= 1.05 * v[0] && v[2] <= 1.05 * v[1],
                _ => v[0] > v[1] && v[1] > v[2],
            };
            pass &= ok;
            lines.push(format!(
                "d{dim} {criterion} {:.3}/{:.3}/{:.3}{}",
                v[0],
                v[1],
                v[2],
                if ok { "" } else { " (violated)" }
            ));
        }
    }
    let elapsed = start.elapsed();
    pass &= elapsed < Duration::from_secs(30 * 60);
    verdict(pass, format!("median max error by wave: {}; {:.0}s", lines.join(", "), elapsed.as_secs_f64()))
}

/// Greedy maximin replayed from scratch: every pick after the first must
/// maximize the distance to the nearest existing or chosen point.
fn check_greedy(candidates: &[Vec<f64>], existing: &[Vec<f64>], batch: &[Vec<f64>]) -> bool {
    let dist = |a: &[f64], b: &[f64]| -> f64 { a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt() };
    for step in 1..batch.len() {
        let chosen = &batch[..step];
        let nearest = |p: &[f64]| -> f64 {
            existing
                .iter()
                .chain(chosen)
                .map(|q| dist(p, q))
                .fold(f64::INFINITY, f64::min)
        };
        let best = candidates
            .iter()
            .filter(|c| !chosen.contains(c))
            .map(|c| nearest(c))
            .fold(f64::NEG_INFINITY, f64::max);
        if nearest(&batch[step]) < best {
            return false;
        }
    }
    true
}

fn ac9() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut bad = Vec::new();
    for case in 0..100 {
        let n = rng.gen_range(2..=60);
        let d = rng.gen_range(1..=4);
        let points: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.gen()).collect()).collect();
        let scores: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..10.0)).collect();
        let existing: Vec<Vec<f64>> = (0..rng.gen_range(0..5))
            .map(|_| (0..d).map(|_| rng.gen()).collect())
            .collect();
        let alpha = rng.gen_range(0.0..1.0);
        let batch_size = rng.gen_range(1..=n.min(10));
        let ranked = rank_by_scores(CriterionId::Entropy, points.clone(), scores.clone());
        let selection = select_batch(&ranked, &existing, &SelectionConfig::new(alpha, batch_size).unwrap()).unwrap();
        let best = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let top = &points[scores.iter().position(|&s| s == best).unwrap()];
        let pool: Vec<Vec<f64>> = selection.candidates.iter().map(|c| c.point.clone()).collect();
        let eligible: Vec<Vec<f64>> = if selection.warnings.is_empty() {
            points
                .iter()
                .zip(&scores)
                .filter(|(_, s)| **s >= alpha * best)
                .map(|(p, _)| p.clone())
                .collect()
        } else {
            pool.clone()
        };
        let ok = selection.batch.len() == batch_size
            && &selection.batch[0] == top
            && selection.batch.iter().all(|p| eligible.contains(p))
            && check_greedy(&eligible, &existing, &selection.batch);
        if !ok {
            bad.push(case);
        }
    }
    verdict(bad.is_empty(), format!("failing cases {bad:?} of 100"))
}

fn ac10() -> Verdict {
    let (a, _) = franke_run();
    let (b, _) = franke_run();
    let (a, b) = (metrics_bytes(&a), metrics_bytes(&b));
    verdict(a == b, format!("{} and {} bytes, identical: {}", a.len(), b.len(), a == b))
}

fn synthetic_outputs(x: &[f64]) -> Vec<f64> {
    vec![
        franke(x).unwrap(),
        (3.0 * x[0]).sin() + x[1],
        x[0] * x[1] + 0.5 * x[1] * x[1],
    ]
}

fn ac11() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);

    // Round trip through CSV with exact lookups.
    let inputs: Vec<Vec<f64>> = (0..200).map(|_| (0..3).map(|_| rng.gen_range(-5.0..5.0)).collect()).collect();
    let outputs: Vec<Vec<f64>> = inputs
        .iter()
        .map(|x| vec![x[0] * x[1], (x[2]).exp(), x.iter().sum::<f64>() / 3.0])
        .collect();
    let names = |p: &str, n: usize| (1..=n).map(|i| format!("{p}{i}")).collect::<Vec<_>>();
    let table = TabulatedSimulator::from_rows(
        names("x", 3),
        names("y", 3),
        inputs.clone(),
        outputs.clone(),
        Interpolation::Exact,
    )
    .unwrap();
    let path = dir.path().join("roundtrip.csv");
    table.save(&path).unwrap();
    let loaded = TabulatedSimulator::<f64>::load(&path, Interpolation::Exact).unwrap();
    let round_trip = loaded.inputs() == inputs.as_slice()
        && loaded.outputs() == outputs.as_slice()
        && inputs.iter().zip(&outputs).all(|(x, y)| &loaded.eval(x).unwrap() == y);

    // Three-output archive on a 41 x 41 grid matched at a known input.
    let grid: Vec<Vec<f64>> = (0..41)
        .flat_map(|i| (0..41).map(move |j| vec![i as f64 / 40.0, j as f64 / 40.0]))
        .collect();
    let archive_out: Vec<Vec<f64>> = grid.iter().map(|x| synthetic_outputs(x)).collect();
    let archive = TabulatedSimulator::from_rows(
        names("x", 2),
        vec!["a".into(), "b".into(), "c".into()],
        grid,
        archive_out,
        Interpolation::Nearest,
    )
    .unwrap();
    let archive_path = dir.path().join("archive.csv");
    archive.save(&archive_path).unwrap();
    let truth = synthetic_outputs(&[0.3, 0.6]);
    let outputs = ["a", "b", "c"]
        .iter()
        .zip(&truth)
        .map(|(id, z)| OutputConfig {
            id: id.to_string(),
            z: Some(*z),
            var_md: 0.0,
            var_me: 1e-4,
            k: 3.0,
        })
        .collect();
    let mut config = ExperimentConfig::new(
        SimulatorConfig::Tabulated {
            path: archive_path,
            interpolation: Interpolation::Nearest,
        },
        outputs,
    );
    config.initial_design_size = Some(20);
    config.batch_size = Some(5);
    config.n_waves = 2;
    config.replications = 2;
    config.criteria = vec![CriterionId::Entropy];
    config.use_stopping_rule = false;
    config.seed = MASTER_SEED;
    let outcome = run_replications(&config, RunOptions::default()).unwrap();
    let records: Vec<_> = outcome.states.iter().flat_map(|s| &s.waves).collect();
    let draws: usize = records.iter().map(|w| w.second_max_draws).sum();
    let violations: usize = records.iter().map(|w| w.order_violations).sum();
    let pass = round_trip
        && outcome.failures().is_empty()
        && records.len() == 4
        && records.iter().all(|w| w.second_max_draws > 0)
        && violations == 0;
    verdict(
        pass,
        format!(
            "round trip exact: {round_trip}; {} waves, {draws} second-max draws, {violations} with I(2) > I(1)",
            records.len()
        ),
    )
}

fn main() {
    let filters: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .map(|a| a.to_lowercase())
        .collect();
    let checks: [(&str, &str, fn() -> Verdict); 11] = [
        ("ac1", "criteria vs quadrature and Monte Carlo", ac1),
        ("ac2", "expected risk branch integrals", ac2),
        ("ac3", "CRPS", ac3),
        ("ac4", "probabilistic implausibility", ac4),
        ("ac5", "GP interpolation and mixture moments", ac5),
        ("ac6", "torus clusters", ac6),
        ("ac7", "Franke trend", ac7),
        ("ac8", "random-function trend", ac8),
        ("ac9", "maximin batch", ac9),
        ("ac10", "determinism", ac10),
        ("ac11", "tabulated archive and second maximum", ac11),
    ];
    let mut failed = 0;
    for (id, title, check) in checks {
        if !filters.is_empty() && !filters.iter().any(|f| f == id) {
            continue;
        }
        let start = Instant::now();
        let v = catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|e| {
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                verdict(false, format!("panicked: {msg}"))
            });
        if !v.pass {
            failed += 1;
        }
        println!(
            "{} {} ({title}): {} [{:.1}s]",
            id.to_uppercase(),
            if v.pass { "PASS" } else { "FAIL" },
            v.detail,
            start.elapsed().as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
