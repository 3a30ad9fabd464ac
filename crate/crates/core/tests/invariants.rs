use histmatch::criteria::{entropic_profile, eci, expected_risk, score_mixture, CriterionId, CriterionInput, CriterionOptions, MixtureMode};
use histmatch::emulator::{mixture_moments, PredictiveMixture};
use histmatch::implausibility::{
    log_prob_nonimplausible, prob_nonimplausible, second_max_implausibility, SecondMaxSampler, TargetDatum,
    UncertaintyBudget,
};
use histmatch::scoring::crps_mixture;
use proptest::prelude::*;

fn std_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

fn std_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

fn budget() -> impl Strategy<Value = UncertaintyBudget<f64>> {
    (0.0f64..1.0, 0.0f64..1.0, 1.0f64..4.0).prop_map(|(md, me, k)| UncertaintyBudget::new(md, me, k).unwrap())
}

proptest! {
    #[test]
    fn criteria_are_nonnegative_and_bounded(
        m in -5.0f64..5.0, s in 0.01f64..5.0, z in -5.0f64..5.0, b in budget()
    ) {
        let input = CriterionInput { mean: m, sigma: s, budget: b, z };
        let eps2 = b.k * b.k * (s * s + b.var_md + b.var_me);
        let e = eci(&input).unwrap().value;
        prop_assert!(e >= 0.0 && e <= eps2 * (1.0 + 1e-12));
        let r = expected_risk(&input).unwrap().value;
        // The minority-side loss peaks at m = z, where it equals σ φ(0).
        prop_assert!(r >= 0.0 && r <= s * std_pdf(0.0) * (1.0 + 1e-12));
        prop_assert!(entropic_profile(&input).unwrap().value >= 0.0);
    }

    #[test]
    fn gaussian_crps_matches_the_standard_closed_form(m in -5.0f64..5.0, s in 0.01f64..5.0, z in -5.0f64..5.0) {
        let u = (z - m) / s;
        let expected = s * (u * (2.0 * std_cdf(u) - 1.0) + 2.0 * std_pdf(u) - 1.0 / std::f64::consts::PI.sqrt());
        let got = crps_mixture(&PredictiveMixture::single(m, s * s).unwrap(), z);
        prop_assert!((got - expected).abs() <= 1e-10 * (1.0 + expected.abs()));
    }

    #[test]
    fn duplicated_components_behave_like_one(m in -3.0f64..3.0, v in 0.01f64..4.0, z in -3.0f64..3.0, b in budget()) {
        let one = PredictiveMixture::single(m, v).unwrap();
        let three = PredictiveMixture::equal_weights(&[(m, v), (m, v), (m, v)]).unwrap();
        let t = TargetDatum::new(z, "y").unwrap();
        prop_assert!((crps_mixture(&one, z) - crps_mixture(&three, z)).abs() < 1e-12);
        prop_assert!((prob_nonimplausible(&one, &b, &t).unwrap() - prob_nonimplausible(&three, &b, &t).unwrap()).abs() < 1e-12);
        let (mm, vv) = mixture_moments(&three);
        prop_assert!((mm - m).abs() < 1e-12 && (vv - v).abs() < 1e-12);
        for c in [CriterionId::Eci, CriterionId::Risk, CriterionId::Entropy] {
            let a = score_mixture(c, &one, &b, z, &CriterionOptions::default()).unwrap();
            let per = CriterionOptions { mode: MixtureMode::PerComponent, ..CriterionOptions::default() };
            let p = score_mixture(c, &three, &b, z, &per).unwrap();
            prop_assert!((a - p).abs() < 1e-10 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn log_probability_is_consistent(
        parts in prop::collection::vec((-4.0f64..4.0, 0.0f64..3.0), 1..6), z in -4.0f64..4.0, b in budget()
    ) {
        let mix = PredictiveMixture::equal_weights(&parts).unwrap();
        let t = TargetDatum::new(z, "y").unwrap();
        let p = prob_nonimplausible(&mix, &b, &t).unwrap();
        let lp = log_prob_nonimplausible(&mix, &b, &t).unwrap();
        prop_assert!((0.0..=1.0).contains(&p));
        prop_assert!(lp <= 0.0);
        if p > 1e-300 {
            prop_assert!((lp.exp() - p).abs() <= 1e-9);
        }
    }

    #[test]
    fn second_maximum_never_exceeds_the_maximum(values in prop::collection::vec(0.0f64..50.0, 2..8)) {
        let second = second_max_implausibility(&values).unwrap();
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(second <= max);
        prop_assert!(values.iter().filter(|v| **v >= second).count() >= 2);
    }
}

#[test]
fn second_max_sampler_matches_independent_outputs() {
    // With three identical independent outputs, P{I(2) <= k} equals the
    // probability that at least two of three draws fall inside the band.
    let b = UncertaintyBudget::new(0.0, 0.5, 2.0).unwrap();
    let mix = PredictiveMixture::single(0.4, 1.0).unwrap();
    let t = TargetDatum::new(0.0, "y").unwrap();
    let p: f64 = prob_nonimplausible(&mix, &b, &t).unwrap();
    let expected = p * p * p + 3.0 * p * p * (1.0 - p);
    let sampler = SecondMaxSampler::new(3, 200_000, 9).unwrap();
    let est = sampler
        .estimate(&[mix.clone(), mix.clone(), mix], &[b, b, b], &[t.clone(), t.clone(), t])
        .unwrap();
    let se = (expected * (1.0 - expected) / 200_000.0).sqrt();
    assert!((est.probability - expected).abs() <= 3.0 * se, "{} vs {expected}", est.probability);
    assert_eq!(est.order_violations, 0);
}
