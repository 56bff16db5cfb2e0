//! Quick oracle and invariant checks runnable from the command line.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::autodiff::{forward, forward_jet, Architecture, NetworkParams};
use crate::bayes::{sample, HmcConfig, StandardNormalPotential};
use crate::error::Result;
use crate::pde::{PdeProblem, PointCounts, PointSet, PROBLEM_NAMES};
use crate::training::{base_loss_and_grad, Batches, LossWeights};
use crate::uq::{coverage, normal_quantile, rmse, sharpness, PredictiveEnsemble, Z_975};

#[derive(Clone, Debug, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn outcome(name: &'static str, passed: bool, detail: String) -> CheckOutcome {
    CheckOutcome { name, passed, detail }
}

/// Run every check; errors inside a check count as a failure of that check.
pub fn self_check() -> Vec<CheckOutcome> {
    let checks: [(&'static str, fn() -> Result<(bool, String)>); 5] = [
        ("input jets match finite differences", jets_vs_fd),
        ("loss gradients match finite differences", loss_grad_vs_fd),
        ("exact solutions satisfy their PDEs", manufactured),
        ("metric examples", metric_examples),
        ("HMC recovers standard normal moments", hmc_moments),
    ];
    checks
        .into_iter()
        .map(|(name, f)| match f() {
            Ok((passed, detail)) => outcome(name, passed, detail),
            Err(e) => outcome(name, false, e.to_string()),
        })
        .collect()
}

fn random_net(rng: &mut ChaCha8Rng, input_dim: usize, output_dim: usize) -> Result<NetworkParams> {
    let depth = rng.random_range(1..=3);
    let hidden = (0..depth).map(|_| rng.random_range(2..=6)).collect();
    let arch = Architecture::new(input_dim, hidden, output_dim)?;
    let mut p = NetworkParams::zeros(&arch)?;
    for v in p.as_mut_slice() {
        *v = rng.random_range(-1.0..1.0);
    }
    Ok(p)
}

fn jets_vs_fd() -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (mut worst1, mut worst2) = (0.0f64, 0.0f64);
    for _ in 0..20 {
        let dim = rng.random_range(1..=2);
        let p = random_net(&mut rng, dim, 1)?;
        let x: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        for axis in 0..dim {
            let (jets, _) = forward_jet(&p, &x, axis)?;
            let f = |h: f64| -> Result<f64> {
                let mut y = x.clone();
                y[axis] += h;
                Ok(forward(&p, &y)?[0])
            };
            let (h1, h2) = (1e-6, 1e-4);
            let d1 = (f(h1)? - f(-h1)?) / (2.0 * h1);
            let d2 = (f(h2)? - 2.0 * f(0.0)? + f(-h2)?) / (h2 * h2);
            worst1 = worst1.max((d1 - jets[0].d1).abs());
            worst2 = worst2.max((d2 - jets[0].d2).abs());
        }
    }
    Ok((worst1 < 1e-6 && worst2 < 1e-4, format!("max |d1 err| {worst1:.2e}, max |d2 err| {worst2:.2e}")))
}

fn loss_grad_vs_fd() -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut worst = 0.0f64;
    for (i, name) in ["poisson1d", "heat_inverse", "burgers"].into_iter().enumerate() {
        let problem = PdeProblem::from_name(name)?;
        let counts = PointCounts {
            collocation: if problem.input_dim() == 1 { 6 } else { 9 },
            sensors: 4,
            boundary_per_edge: 3,
            initial: 3,
        };
        let points = PointSet::sample(&problem, &counts, 0.1, i as u64)?;
        let batches = Batches::new(&problem, &points)?;
        let weights = LossWeights::default();
        let mut p = random_net(&mut rng, problem.input_dim(), problem.output_dim())?;
        let (_, grad) = base_loss_and_grad(&problem, &batches, &p, &weights)?;
        let h = 1e-6;
        let (mut num, mut den) = (0.0, 0.0);
        for k in 0..grad.len() {
            let orig = p.as_slice()[k];
            p.as_mut_slice()[k] = orig + h;
            let up = base_loss_and_grad(&problem, &batches, &p, &weights)?.0.total;
            p.as_mut_slice()[k] = orig - h;
            let down = base_loss_and_grad(&problem, &batches, &p, &weights)?.0.total;
            p.as_mut_slice()[k] = orig;
            let fd = (up - down) / (2.0 * h);
            num += (fd - grad[k]).powi(2);
            den += fd * fd;
        }
        worst = worst.max((num / den.max(f64::MIN_POSITIVE)).sqrt());
    }
    Ok((worst < 1e-5, format!("max relative gradient error {worst:.2e}")))
}

fn manufactured() -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut worst = 0.0f64;
    for name in PROBLEM_NAMES {
        let problem = PdeProblem::from_name(name)?;
        let latent = match problem {
            PdeProblem::HeatInverse { kappa_true } => Some(kappa_true),
            _ => None,
        };
        for _ in 0..200 {
            let x: Vec<f64> = problem
                .bounds()
                .iter()
                .map(|&(a, b)| rng.random_range(a..b))
                .collect();
            let r = problem.residual(&problem.exact_jets(&x), latent, &x)?;
            worst = worst.max(r.abs());
        }
    }
    Ok((worst < 1e-8, format!("max |residual| {worst:.2e}")))
}

fn metric_examples() -> Result<(bool, String)> {
    let two = PredictiveEnsemble::new(ndarray::array![[0.0, 0.75], [2.0, 0.25]])?;
    let exact = [1.0, 0.5];
    let ok = two.mean() == [1.0, 0.5]
        && two.variance() == [1.0, 0.0625]
        && sharpness(&two) == 2.5
        && coverage(&two, &exact, 0.95)? == 1.0
        && rmse(&two, &exact)? == 0.0
        && (normal_quantile(0.975) - Z_975).abs() < 1e-8;
    Ok((ok, "two-member ensemble statistics and 1.96 quantile".into()))
}

fn hmc_moments() -> Result<(bool, String)> {
    let mut pot = StandardNormalPotential { dim: 1 };
    let config = HmcConfig {
        step_size: 0.2,
        leapfrog_steps: 10,
        burn_in: 500,
        total: 5500,
    };
    let chain = sample(&mut pot, vec![0.0], &config, 3)?;
    let n = chain.len() as f64;
    let mean = chain.flat().iter().sum::<f64>() / n;
    let var = chain.flat().iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    Ok((
        mean.abs() < 0.05 && (var - 1.0).abs() < 0.1,
        format!("mean {mean:.4}, variance {var:.4}"),
    ))
}
