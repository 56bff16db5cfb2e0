//! Posterior potential and HMC sampler behavior.

use epinn::autodiff::{Architecture, NetworkParams};
use epinn::bayes::{
    latent_draws, posterior_predict, read_chain, sample, write_chain, Chain, HmcConfig, LikelihoodSpec, PinnPotential,
    Potential, StandardNormalPotential,
};
use epinn::pde::{PdeProblem, PointCounts, PointSet};
use ndarray::{array, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn empty_points(dim: usize) -> PointSet {
    PointSet {
        collocation: Array2::zeros((0, dim)),
        boundary: Array2::zeros((0, dim)),
        boundary_values: vec![],
        initial: Array2::zeros((0, dim)),
        initial_values: vec![],
        sensors: Array2::zeros((0, dim)),
        sensor_values: vec![],
        noise_sigma: 0.0,
    }
}

fn normal_config(step_size: f64, leapfrog_steps: usize, total: usize) -> HmcConfig {
    HmcConfig {
        step_size,
        leapfrog_steps,
        burn_in: 500,
        total,
    }
}

#[test]
fn priors_only_potential_vanishes_at_zero() {
    let problem = PdeProblem::poisson1d();
    let arch = Architecture::new(1, vec![4], 1).unwrap();
    let mut pot = PinnPotential::new(&problem, &empty_points(1), &arch, LikelihoodSpec::new(1.0)).unwrap();
    let (u, grad) = pot.value_and_grad(&vec![0.0; arch.param_len()]).unwrap();
    assert_eq!(u, 0.0);
    assert!(grad.iter().all(|&g| g == 0.0));
}

#[test]
fn single_unit_sensor_contributes_one_half() {
    let problem = PdeProblem::poisson1d();
    let arch = Architecture::new(1, vec![4], 1).unwrap();
    let mut points = empty_points(1);
    points.sensors = array![[0.3]];
    points.sensor_values = vec![1.0];
    let mut pot = PinnPotential::new(&problem, &points, &arch, LikelihoodSpec::new(1.0)).unwrap();
    let (u, _) = pot.value_and_grad(&vec![0.0; arch.param_len()]).unwrap();
    assert!((u - 0.5).abs() < 1e-15, "{u}");
}

#[test]
fn potential_gradient_matches_finite_differences() {
    for name in ["poisson1d", "heat_inverse", "burgers"] {
        let problem = PdeProblem::from_name(name).unwrap();
        let counts = PointCounts {
            collocation: if problem.input_dim() == 2 { 9 } else { 8 },
            sensors: 5,
            boundary_per_edge: 3,
            initial: 3,
        };
        let points = PointSet::sample(&problem, &counts, 0.1, 4).unwrap();
        let arch = Architecture::new(problem.input_dim(), vec![4], 1).unwrap();
        let spec = LikelihoodSpec {
            sigma_u: 0.5,
            sigma_f: 0.3,
            sigma_b: 0.2,
        };
        let mut pot = PinnPotential::new(&problem, &points, &arch, spec).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut theta = NetworkParams::xavier_with_biases(&arch, &mut rng).unwrap().into_flat();
        if problem.is_inverse() {
            theta.push(0.07);
        }
        let (_, grad) = pot.value_and_grad(&theta).unwrap();
        let h = 1e-6;
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..theta.len() {
            let mut plus = theta.clone();
            plus[i] += h;
            let mut minus = theta.clone();
            minus[i] -= h;
            let fd = (pot.value_and_grad(&plus).unwrap().0 - pot.value_and_grad(&minus).unwrap().0) / (2.0 * h);
            num += (grad[i] - fd).powi(2);
            den += fd * fd;
        }
        let rel = (num / den).sqrt();
        assert!(rel < 1e-5, "{name}: {rel:e}");
    }
}

#[test]
fn standard_normal_moments() {
    let mut pot = StandardNormalPotential { dim: 1 };
    let chain = sample(&mut pot, vec![0.0], &normal_config(0.2, 10, 5500), 3).unwrap();
    assert_eq!(chain.len(), 5000);
    let xs = chain.flat();
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / xs.len() as f64;
    assert!(mean.abs() < 0.05, "mean {mean}");
    assert!((var - 1.0).abs() < 0.1, "variance {var}");
}

#[test]
fn oversized_step_is_mostly_rejected() {
    // Leapfrog on a unit oscillator stays stable below a step of 2, so the
    // energy error only blows up past that.
    let mut pot = StandardNormalPotential { dim: 1 };
    let chain = sample(&mut pot, vec![0.0], &normal_config(2.5, 50, 2500), 3).unwrap();
    let rate = chain.acceptance_rate.unwrap();
    assert!(rate < 0.5, "acceptance {rate}");
}

#[test]
fn zero_channel_posterior_is_the_prior() {
    let problem = PdeProblem::poisson1d();
    let arch = Architecture::new(1, vec![3], 1).unwrap();
    let mut pot = PinnPotential::new(&problem, &empty_points(1), &arch, LikelihoodSpec::new(1.0)).unwrap();
    let chain = sample(&mut pot, vec![0.0; arch.param_len()], &normal_config(0.2, 8, 6500), 8).unwrap();
    for j in 0..chain.dim() {
        let xs: Vec<f64> = (0..chain.len()).map(|i| chain.sample(i)[j]).collect();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / xs.len() as f64;
        assert!((var - 1.0).abs() < 0.1, "weight {j}: variance {var}");
    }
}

#[test]
fn sampling_is_deterministic_in_seed() {
    let mut pot = StandardNormalPotential { dim: 3 };
    let config = normal_config(0.2, 5, 700);
    let a = sample(&mut pot, vec![0.1; 3], &config, 21).unwrap();
    let b = sample(&mut pot, vec![0.1; 3], &config, 21).unwrap();
    let c = sample(&mut pot, vec![0.1; 3], &config, 22).unwrap();
    assert_eq!(a.flat(), b.flat());
    assert_ne!(a.flat(), c.flat());
}

#[test]
fn chain_statistics_and_latents() {
    let arch = Architecture::new(1, vec![2], 1).unwrap();
    let n = arch.param_len();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let theta: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();

    let mut flat = theta.clone();
    flat.extend_from_slice(&theta);
    let same = Chain::from_samples(n, flat, HmcConfig::default()).unwrap();
    let ens = posterior_predict(&same, &arch, array![[-0.5], [0.0], [0.7]].view()).unwrap();
    assert!(ens.variance().iter().all(|&v| v == 0.0));

    // Output bias shifts u, so {b, b + 2} gives u values {u, u + 2}.
    let mut zero = vec![0.0; n];
    let mut shifted = zero.clone();
    shifted[n - 1] = 2.0;
    zero.extend_from_slice(&shifted);
    let pair = Chain::from_samples(n, zero, HmcConfig::default()).unwrap();
    let ens = posterior_predict(&pair, &arch, array![[0.2]].view()).unwrap();
    assert!((ens.mean()[0] - 1.0).abs() < 1e-15);
    assert!((ens.variance()[0] - 1.0).abs() < 1e-15);

    let mut with_kappa = vec![0.0; n];
    with_kappa.push(0.08);
    with_kappa.extend(vec![0.0; n]);
    with_kappa.push(0.12);
    let chain = Chain::from_samples(n + 1, with_kappa, HmcConfig::default()).unwrap();
    assert_eq!(latent_draws(&chain, &arch).unwrap(), vec![0.08, 0.12]);
}

#[test]
fn chain_dump_round_trips() {
    let mut pot = StandardNormalPotential { dim: 4 };
    let chain = sample(&mut pot, vec![0.0; 4], &normal_config(0.2, 5, 600), 1).unwrap();
    let arch = Architecture::new(1, vec![1], 1).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("chain.bin");
    write_chain(&path, &chain, &arch, 1).unwrap();
    let (back, header) = read_chain(&path).unwrap();
    assert_eq!(back.flat(), chain.flat());
    assert_eq!(back.dim(), 4);
    assert_eq!(header.seed, 1);
}
