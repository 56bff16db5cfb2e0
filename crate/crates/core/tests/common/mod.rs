//! Checks shared by the oracle suites and the acceptance report.
#![allow(dead_code)]

use std::f64::consts::PI;

use epinn::autodiff::{forward, forward_jet, Architecture, NetworkParams};
use epinn::bayes::{Chain, HmcConfig};
use epinn::inverse::{kappa_draws, kappa_summarize};
use epinn::models::DropoutPinn;
use epinn::pde::{PdeProblem, PointCounts, PointSet, PROBLEM_NAMES};
use epinn::training::{base_loss_and_grad, Batches, LossWeights};
use epinn::uq::{coverage, rmse, sharpness, PredictiveEnsemble};
use ndarray::{array, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub fn random_params(rng: &mut ChaCha8Rng, input_dim: usize, output_dim: usize) -> NetworkParams {
    let depth = rng.random_range(1..=3);
    let hidden = (0..depth).map(|_| rng.random_range(2..=6)).collect();
    let arch = Architecture::new(input_dim, hidden, output_dim).unwrap();
    let mut p = NetworkParams::zeros(&arch).unwrap();
    for v in p.as_mut_slice() {
        *v = rng.random_range(-1.0..1.0);
    }
    p
}

fn small_points(problem: &PdeProblem, seed: u64) -> PointSet {
    let counts = PointCounts {
        collocation: if problem.input_dim() == 1 { 5 } else { 9 },
        sensors: 3,
        boundary_per_edge: 3,
        initial: 3,
    };
    PointSet::sample(problem, &counts, 0.1, seed).unwrap()
}

/// Normwise relative error `||g - fd|| / ||fd||`.
pub fn relative_error(g: &[f64], fd: &[f64]) -> f64 {
    let num: f64 = g.iter().zip(fd).map(|(a, b)| (a - b) * (a - b)).sum();
    let den: f64 = fd.iter().map(|b| b * b).sum();
    (num / den).sqrt()
}

/// Composite-loss gradient error against central differences, one entry per
/// random net, cycling through the six problems.
pub fn loss_gradient_errors(trials: usize, seed: u64) -> Vec<(String, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weights = LossWeights::default();
    (0..trials)
        .map(|trial| {
            let problem = PdeProblem::from_name(PROBLEM_NAMES[trial % PROBLEM_NAMES.len()]).unwrap();
            let points = small_points(&problem, trial as u64);
            let batches = Batches::new(&problem, &points).unwrap();
            let mut p = random_params(&mut rng, problem.input_dim(), problem.output_dim());
            let (_, grad) = base_loss_and_grad(&problem, &batches, &p, &weights).unwrap();
            let h = 1e-6;
            let mut fd = vec![0.0; grad.len()];
            for (k, slot) in fd.iter_mut().enumerate() {
                let orig = p.as_slice()[k];
                p.as_mut_slice()[k] = orig + h;
                let up = base_loss_and_grad(&problem, &batches, &p, &weights).unwrap().0.total;
                p.as_mut_slice()[k] = orig - h;
                let down = base_loss_and_grad(&problem, &batches, &p, &weights).unwrap().0.total;
                p.as_mut_slice()[k] = orig;
                *slot = (up - down) / (2.0 * h);
            }
            (problem.name().to_string(), relative_error(&grad, &fd))
        })
        .collect()
}

/// Worst absolute first and second derivative errors of input jets against
/// central differences over `trials` random nets.
pub fn jet_errors(trials: usize, seed: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut e1, mut e2) = (0.0f64, 0.0f64);
    for trial in 0..trials {
        let dim = 1 + trial % 2;
        let p = random_params(&mut rng, dim, 1 + trial % 3 / 2);
        let x: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        for axis in 0..dim {
            let (jets, _) = forward_jet(&p, &x, axis).unwrap();
            let f = |h: f64| {
                let mut y = x.clone();
                y[axis] += h;
                forward(&p, &y).unwrap()
            };
            let (h1, h2) = (1e-6, 1e-4);
            let (up1, down1) = (f(h1), f(-h1));
            let (up2, mid, down2) = (f(h2), f(0.0), f(-h2));
            for (c, jet) in jets.iter().enumerate() {
                assert!((jet.value - mid[c]).abs() < 1e-14);
                e1 = e1.max((jet.d1 - (up1[c] - down1[c]) / (2.0 * h1)).abs());
                e2 = e2.max((jet.d2 - (up2[c] - 2.0 * mid[c] + down2[c]) / (h2 * h2)).abs());
            }
        }
    }
    (e1, e2)
}

/// Sources written out by hand, using sin^3(t) = (3 sin t - sin 3t) / 4 for
/// the Poisson family so they share no algebra with the library.
pub fn hand_source(problem: &PdeProblem, p: &[f64]) -> f64 {
    let x = p[0];
    let cube_dd = -27.0 * (6.0 * x).sin() + 81.0 * (18.0 * x).sin();
    match *problem {
        PdeProblem::Poisson1d { lambda } => lambda * cube_dd,
        PdeProblem::NonlinearPoisson1d { lambda, k } => {
            let u = (3.0 * (6.0 * x).sin() - (18.0 * x).sin()) / 4.0;
            lambda * cube_dd + k * u.tanh()
        }
        PdeProblem::Porous1d(params) => params.forcing,
        PdeProblem::NonlinearPoisson2d { lambda } => {
            let u = (PI * x).sin() * (PI * p[1]).sin();
            -2.0 * PI * PI * lambda * u + u * u * u - u
        }
        PdeProblem::HeatInverse { .. } => 0.0,
        PdeProblem::Burgers { nu, k_wave, omega } => {
            let (s, c) = (k_wave * x + omega * p[1]).sin_cos();
            omega * c + k_wave * s * c + nu * k_wave * k_wave * s
        }
    }
}

pub fn random_interior(problem: &PdeProblem, rng: &mut ChaCha8Rng) -> Vec<f64> {
    problem
        .bounds()
        .iter()
        .map(|&(a, b)| a + (b - a) * rng.random_range(1e-6..1.0 - 1e-6))
        .collect()
}

pub fn latent(problem: &PdeProblem) -> Option<f64> {
    match *problem {
        PdeProblem::HeatInverse { kappa_true } => Some(kappa_true),
        _ => None,
    }
}

/// Worst `|operator(exact) - hand source|` and worst library residual per
/// problem over `n` random interior points.
pub fn manufactured_residuals(n: usize, seed: u64) -> Vec<(String, f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    PROBLEM_NAMES
        .iter()
        .map(|name| {
            let problem = PdeProblem::from_name(name).unwrap();
            let (mut direct, mut lib) = (0.0f64, 0.0f64);
            for _ in 0..n {
                let x = random_interior(&problem, &mut rng);
                let jets = problem.exact_jets(&x);
                let op = problem.operator(&jets, latent(&problem)).unwrap();
                direct = direct.max((op - hand_source(&problem, &x)).abs());
                lib = lib.max(problem.residual(&jets, latent(&problem), &x).unwrap().abs());
            }
            (name.to_string(), direct, lib)
        })
        .collect()
}

fn ensemble(rows: &[Vec<f64>]) -> PredictiveEnsemble {
    let n = rows[0].len();
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    PredictiveEnsemble::new(Array2::from_shape_vec((rows.len(), n), flat).unwrap()).unwrap()
}

/// Ensemble whose members are `mu +- sigma`, so mean is `mu` and std `sigma`.
pub fn symmetric(mu: &[f64], sigma: &[f64]) -> PredictiveEnsemble {
    let lo: Vec<f64> = mu.iter().zip(sigma).map(|(m, s)| m - s).collect();
    let hi: Vec<f64> = mu.iter().zip(sigma).map(|(m, s)| m + s).collect();
    ensemble(&[lo, hi])
}

/// Every closed-form example of the uncertainty and inverse modules, checked
/// with exact equality.
pub fn metric_examples() -> Vec<(&'static str, bool)> {
    let exact = [0.25, -0.5, 0.75];
    let pair = ensemble(&[vec![0.0], vec![2.0]]);
    let same = ensemble(&vec![vec![0.3, -1.0]; 5]);
    let off: Vec<f64> = exact.iter().map(|u| u + 0.75).collect();
    let shifted: Vec<f64> = exact.iter().map(|u| u + 0.1).collect();

    // Zero weights: every member outputs the biases (u, kappa) = (0, 0.1).
    let arch = Architecture::new(2, vec![4], 2).unwrap();
    let mut params = NetworkParams::zeros(&arch).unwrap();
    params.bias_mut(1)[1] = 0.1;
    let constant = DropoutPinn::from_params(params, 0.2).unwrap();
    let colloc = array![[0.1, 0.2], [0.5, 0.5], [0.9, 0.7]];
    let kappa_const = kappa_draws(&epinn::uq::Predictor::Dropout(&constant), colloc.view(), 4, 0).unwrap();

    let karch = Architecture::new(2, vec![1], 1).unwrap();
    let n = karch.param_len();
    let mut flat = vec![0.0; n];
    flat.push(0.08);
    flat.extend(vec![0.0; n]);
    flat.push(0.12);
    let chain = Chain::from_samples(n + 1, flat, HmcConfig::default()).unwrap();
    let chain_draws = kappa_draws(&epinn::uq::Predictor::Bpinn { chain: &chain, arch: &karch }, colloc.view(), 2, 0).unwrap();

    let flat_summary = kappa_summarize(&[0.1, 0.1], "E-PINN", 0.1).unwrap();
    let spread = kappa_summarize(&[0.0, 0.2], "E-PINN", 0.1).unwrap();
    vec![
        ("two-member mean and variance", pair.mean() == [1.0] && pair.variance() == [1.0]),
        ("identical members have zero variance", same.variance() == [0.0, 0.0]),
        ("sharpness of sigma 0.25 is 1", sharpness(&symmetric(&[0.0; 8], &[0.25; 8])) == 1.0),
        ("zero variance has zero sharpness", sharpness(&same) == 0.0),
        ("exact mean is fully covered", coverage(&symmetric(&exact, &[0.25; 3]), &exact, 0.95).unwrap() == 1.0),
        ("three-sigma error is never covered", coverage(&symmetric(&off, &[0.25; 3]), &exact, 0.95).unwrap() == 0.0),
        ("zero width at zero error counts", coverage(&symmetric(&exact, &[0.0; 3]), &exact, 0.95).unwrap() == 1.0),
        ("exact mean has zero rmse", rmse(&symmetric(&exact, &[0.5; 3]), &exact).unwrap() == 0.0),
        ("constant error 0.1 gives rmse 0.1", (rmse(&symmetric(&shifted, &[0.5; 3]), &exact).unwrap() - 0.1).abs() < 1e-15),
        ("constant kappa field draws 0.1", kappa_const == vec![0.1; 4]),
        ("chain latents are the draws", chain_draws == vec![0.08, 0.12]),
        ("equal draws: mean 0.1, std 0", flat_summary.mean == 0.1 && flat_summary.std == 0.0),
        ("draws 0 and 0.2: mean 0.1, std sqrt(0.02)", spread.mean == 0.1 && (spread.std - 0.02f64.sqrt()).abs() < 1e-15),
    ]
}

/// Worst deviation of the library metrics from a plain two-pass evaluation
/// on random ensembles.
pub fn two_pass_error(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let (m, n) = (rng.random_range(2..60), rng.random_range(1..300));
        let samples: Vec<f64> = (0..m * n).map(|_| normal.sample(&mut rng)).collect();
        let exact: Vec<f64> = (0..n).map(|_| normal.sample(&mut rng)).collect();
        let ens = PredictiveEnsemble::new(Array2::from_shape_vec((m, n), samples.clone()).unwrap()).unwrap();
        let (mut sigma_sum, mut sq, mut inside) = (0.0, 0.0, 0usize);
        for j in 0..n {
            let column: Vec<f64> = (0..m).map(|i| samples[i * n + j]).collect();
            let mean = column.iter().sum::<f64>() / m as f64;
            let var = column.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / m as f64;
            worst = worst.max((ens.mean()[j] - mean).abs()).max((ens.variance()[j] - var).abs());
            sigma_sum += var.sqrt();
            sq += (mean - exact[j]).powi(2);
            inside += ((mean - exact[j]).abs() <= 1.959_963_984_540_054 * var.sqrt()) as usize;
        }
        worst = worst
            .max((sharpness(&ens) - 4.0 * sigma_sum / n as f64).abs())
            .max((rmse(&ens, &exact).unwrap() - (sq / n as f64).sqrt()).abs())
            .max((coverage(&ens, &exact, 0.95).unwrap() - inside as f64 / n as f64).abs());
    }
    worst
}
