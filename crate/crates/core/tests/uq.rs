//! Predictive statistics, calibration metrics and kappa summaries.

mod common;

use epinn::autodiff::{forward, Architecture, NetworkParams};
use epinn::bayes::{posterior_predict, Chain, HmcConfig};
use epinn::inverse::{histogram, kappa_summarize};
use epinn::models::{dropout_forward, DropoutPinn};
use epinn::training::{kappa_penalty, Adam};
use epinn::uq::{coverage, normal_quantile, rmse, sharpness, PredictiveEnsemble, Z_975};
use ndarray::{array, Array2};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn two_pass(xs: &[f64]) -> (f64, f64) {
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    let ss = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>();
    (mean, ss)
}

#[test]
fn closed_form_examples_hold_exactly() {
    for (label, ok) in common::metric_examples() {
        assert!(ok, "{label}");
    }
    assert!((normal_quantile(0.975) - Z_975).abs() < 1e-8);
    assert!(normal_quantile(0.5).abs() < 1e-12);
}

#[test]
fn mismatched_lengths_are_rejected() {
    let ens = common::symmetric(&[0.0; 3], &[1.0; 3]);
    assert!(coverage(&ens, &[0.0; 2], 0.95).is_err());
    assert!(rmse(&ens, &[0.0; 4]).is_err());
    assert!(coverage(&ens, &[0.0; 3], 1.5).is_err());
}

#[test]
fn metrics_match_two_pass_oracles() {
    let err = common::two_pass_error(17);
    assert!(err < 1e-12, "{err:e}");
}

#[test]
fn constructed_perturbation_variance_is_recovered() {
    let arch = Architecture::new(1, vec![3], 1).unwrap();
    let n = arch.param_len();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let base = NetworkParams::xavier_with_biases(&arch, &mut rng).unwrap().into_flat();
    let head = Normal::new(0.0, 0.1).unwrap();
    let mut flat = Vec::with_capacity(10_000 * n);
    for _ in 0..10_000 {
        let mut theta = base.clone();
        theta[n - 1] += head.sample(&mut rng);
        flat.extend(theta);
    }
    let chain = Chain::from_samples(n, flat, HmcConfig::default()).unwrap();
    let ens = posterior_predict(&chain, &arch, array![[-0.8], [0.1], [0.6]].view()).unwrap();
    for &v in ens.variance() {
        assert!((v - 0.01).abs() < 0.05 * 0.01, "{v}");
    }
}

#[test]
fn dropout_mean_matches_plain_forward() {
    let arch = Architecture::new(1, vec![16], 1).unwrap();
    let model = DropoutPinn::new(&arch, 0.2, 6).unwrap();
    let x = [0.35];
    let plain = forward(&model.params, &x).unwrap()[0];
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let m = 100_000;
    let mean = (0..m).map(|_| dropout_forward(&model, &x, &mut rng).unwrap()[0]).sum::<f64>() / m as f64;
    assert!((mean - plain).abs() < 0.01 * plain.abs(), "{mean} vs {plain}");
}

#[test]
fn kappa_penalty_examples() {
    assert_eq!(kappa_penalty(&[0.1; 7]).unwrap(), 0.0);
    assert!((kappa_penalty(&[0.0, 0.2]).unwrap() - 0.01).abs() < 1e-15);
}

#[test]
fn adam_is_deterministic() {
    let grad = [0.3, -2.0, 1e-3];
    let run = || {
        let mut opt = Adam::new(3, 1e-3);
        let mut p = vec![1.0, 2.0, 3.0];
        for _ in 0..5 {
            opt.step(&mut p, &grad).unwrap();
        }
        p
    };
    assert_eq!(run(), run());
}

prop_compose! {
    fn member_matrix()(m in 2usize..8, n in 1usize..12)
        (values in prop::collection::vec(-5.0f64..5.0, m * n), m in Just(m), n in Just(n)) -> Array2<f64> {
        Array2::from_shape_vec((m, n), values).unwrap()
    }
}

proptest! {
    #[test]
    fn variance_is_shift_invariant(samples in member_matrix(), shift in -10.0f64..10.0) {
        let a = PredictiveEnsemble::new(samples.clone()).unwrap();
        let b = PredictiveEnsemble::new(samples + shift).unwrap();
        for (va, vb) in a.variance().iter().zip(b.variance()) {
            prop_assert!((va - vb).abs() < 1e-9);
        }
    }

    #[test]
    fn sharpness_scales_linearly(samples in member_matrix(), c in 0.0f64..5.0) {
        let a = PredictiveEnsemble::new(samples.clone()).unwrap();
        let b = PredictiveEnsemble::new(samples * c).unwrap();
        prop_assert!((sharpness(&b) - c * sharpness(&a)).abs() < 1e-9 * (1.0 + sharpness(&b)));
    }

    #[test]
    fn coverage_grows_with_gamma(samples in member_matrix(), offset in -3.0f64..3.0, g1 in 0.05f64..0.99, g2 in 0.05f64..0.99) {
        let ens = PredictiveEnsemble::new(samples).unwrap();
        let exact: Vec<f64> = ens.mean().iter().map(|m| m + offset).collect();
        let (lo, hi) = if g1 <= g2 { (g1, g2) } else { (g2, g1) };
        let c_lo = coverage(&ens, &exact, lo).unwrap();
        let c_hi = coverage(&ens, &exact, hi).unwrap();
        prop_assert!((0.0..=1.0).contains(&c_lo));
        prop_assert!(c_lo <= c_hi);
    }

    #[test]
    fn rmse_is_nonnegative_and_zero_at_the_mean(samples in member_matrix()) {
        let ens = PredictiveEnsemble::new(samples).unwrap();
        prop_assert_eq!(rmse(&ens, ens.mean()).unwrap(), 0.0);
        let shifted: Vec<f64> = ens.mean().iter().map(|m| m + 1.0).collect();
        prop_assert!((rmse(&ens, &shifted).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn kappa_summary_is_affine(draws in prop::collection::vec(-1.0f64..1.0, 2..40), a in 0.1f64..4.0, b in -1.0f64..1.0) {
        let s = kappa_summarize(&draws, "m", 0.0).unwrap();
        let mapped: Vec<f64> = draws.iter().map(|d| a * d + b).collect();
        let t = kappa_summarize(&mapped, "m", 0.0).unwrap();
        prop_assert!((t.mean - (a * s.mean + b)).abs() < 1e-12);
        prop_assert!((t.std - a * s.std).abs() < 1e-12);
        let (mean, ss) = two_pass(&draws);
        prop_assert!((s.mean - mean).abs() < 1e-12);
        prop_assert!((s.std - (ss / (draws.len() - 1) as f64).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn histogram_keeps_every_draw(draws in prop::collection::vec(-3.0f64..3.0, 1..200), bins in 1usize..60) {
        let h = histogram(&draws, bins).unwrap();
        prop_assert_eq!(h.len(), bins);
        prop_assert_eq!(h.iter().map(|b| b.count).sum::<usize>(), draws.len());
    }

    #[test]
    fn kappa_penalty_matches_two_pass(values in prop::collection::vec(-2.0f64..2.0, 2..50)) {
        let (_, ss) = two_pass(&values);
        prop_assert!((kappa_penalty(&values).unwrap() - ss / values.len() as f64).abs() < 1e-12);
    }
}
