use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{config_err, PinnError, Result};
use crate::rng::{stream, Stream};

/// Negative log density up to a constant, with its gradient.
pub trait Potential {
    fn dim(&self) -> usize;
    fn value_and_grad(&mut self, position: &[f64]) -> Result<(f64, Vec<f64>)>;
}

/// `U = |theta|^2 / 2`, the standard normal target.
#[derive(Clone, Copy, Debug)]
pub struct StandardNormalPotential {
    pub dim: usize,
}

impl Potential for StandardNormalPotential {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value_and_grad(&mut self, position: &[f64]) -> Result<(f64, Vec<f64>)> {
        let u = 0.5 * position.iter().map(|x| x * x).sum::<f64>();
        Ok((u, position.to_vec()))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HmcConfig {
    pub step_size: f64,
    pub leapfrog_steps: usize,
    pub burn_in: usize,
    /// Iterations including burn-in.
    pub total: usize,
}

impl Default for HmcConfig {
    fn default() -> Self {
        HmcConfig {
            step_size: 5e-5,
            leapfrog_steps: 50,
            burn_in: 1000,
            total: 11000,
        }
    }
}

impl HmcConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return Err(config_err(format!("HMC step size must be positive, got {}", self.step_size)));
        }
        if self.leapfrog_steps == 0 {
            return Err(config_err("HMC needs at least one leapfrog step"));
        }
        if self.burn_in >= self.total {
            return Err(config_err(format!(
                "burn-in ({}) must be smaller than the total sample count ({})",
                self.burn_in, self.total
            )));
        }
        Ok(())
    }
}

/// Position, momentum and the potential with its gradient at the position.
#[derive(Clone, Debug, PartialEq)]
pub struct PhasePoint {
    pub position: Vec<f64>,
    pub momentum: Vec<f64>,
    pub potential: f64,
    pub grad: Vec<f64>,
}

impl PhasePoint {
    pub fn new<P: Potential + ?Sized>(pot: &mut P, position: Vec<f64>, momentum: Vec<f64>) -> Result<Self> {
        let (potential, grad) = pot.value_and_grad(&position)?;
        Ok(PhasePoint {
            position,
            momentum,
            potential,
            grad,
        })
    }

    pub fn hamiltonian(&self) -> f64 {
        self.potential + 0.5 * self.momentum.iter().map(|p| p * p).sum::<f64>()
    }
}

/// `steps` leapfrog steps with identity mass: half kick, drift, half kick.
///
/// Returns `None` if the trajectory leaves the finite range.
pub fn leapfrog<P: Potential + ?Sized>(
    pot: &mut P,
    start: &PhasePoint,
    step_size: f64,
    steps: usize,
) -> Result<Option<PhasePoint>> {
    let mut q = start.position.clone();
    let mut p = start.momentum.clone();
    let mut grad = start.grad.clone();
    let mut u = start.potential;
    for _ in 0..steps {
        for (pi, g) in p.iter_mut().zip(&grad) {
            *pi -= 0.5 * step_size * g;
        }
        for (qi, pi) in q.iter_mut().zip(&p) {
            *qi += step_size * pi;
        }
        let (u_new, g_new) = pot.value_and_grad(&q)?;
        if !u_new.is_finite() || g_new.iter().any(|g| !g.is_finite()) {
            return Ok(None);
        }
        u = u_new;
        grad = g_new;
        for (pi, g) in p.iter_mut().zip(&grad) {
            *pi -= 0.5 * step_size * g;
        }
    }
    Ok(Some(PhasePoint {
        position: q,
        momentum: p,
        potential: u,
        grad,
    }))
}

/// Post-burn-in positions and sampler statistics.
#[derive(Clone, Debug, PartialEq)]
pub struct Chain {
    dim: usize,
    samples: Vec<f64>,
    pub config: HmcConfig,
    pub acceptance_rate: Option<f64>,
    pub burn_in_acceptance: Option<f64>,
    /// Proposals rejected because the trajectory became non-finite.
    pub nonfinite: usize,
    pub median_abs_delta_h: f64,
    pub warnings: Vec<String>,
}

impl Chain {
    pub fn from_samples(dim: usize, samples: Vec<f64>, config: HmcConfig) -> Result<Self> {
        if dim == 0 || samples.len() % dim != 0 {
            return Err(config_err("sample buffer is not a whole number of positions"));
        }
        Ok(Chain {
            dim,
            samples,
            config,
            acceptance_rate: None,
            burn_in_acceptance: None,
            nonfinite: 0,
            median_abs_delta_h: f64::NAN,
            warnings: Vec::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.samples.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn sample(&self, i: usize) -> &[f64] {
        &self.samples[i * self.dim..(i + 1) * self.dim]
    }

    pub fn flat(&self) -> &[f64] {
        &self.samples
    }
}

/// Run HMC from `init`. Momenta are redrawn from `N(0, I)` every iteration
/// and proposals pass a Metropolis test on the Hamiltonian.
pub fn sample<P: Potential + ?Sized>(
    pot: &mut P,
    init: Vec<f64>,
    config: &HmcConfig,
    seed: u64,
) -> Result<Chain> {
    config.validate()?;
    let dim = pot.dim();
    if init.len() != dim {
        return Err(config_err(format!(
            "initial position has length {}, potential expects {dim}",
            init.len()
        )));
    }
    let mut rng = stream(seed, Stream::Hmc);
    let mut current = PhasePoint::new(pot, init, vec![0.0; dim])?;
    if !current.potential.is_finite() {
        return Err(PinnError::Sampler(format!(
            "potential at the initial position is {}",
            current.potential
        )));
    }
    let kept = config.total - config.burn_in;
    let mut samples = Vec::with_capacity(kept * dim);
    let (mut accepted_burn, mut accepted_kept, mut nonfinite) = (0usize, 0usize, 0usize);
    let mut delta_h = Vec::with_capacity(config.total);
    for iter in 0..config.total {
        for p in current.momentum.iter_mut() {
            *p = rng.sample(StandardNormal);
        }
        let h_old = current.hamiltonian();
        let proposal = leapfrog(pot, &current, config.step_size, config.leapfrog_steps)?;
        let u: f64 = rng.random();
        let accept = match proposal {
            Some(prop) => {
                let dh = prop.hamiltonian() - h_old;
                delta_h.push(dh.abs());
                let ok = dh.is_finite() && u.ln() < -dh;
                if ok {
                    current = prop;
                }
                ok
            }
            None => {
                nonfinite += 1;
                delta_h.push(f64::INFINITY);
                false
            }
        };
        if iter < config.burn_in {
            accepted_burn += accept as usize;
        } else {
            accepted_kept += accept as usize;
            samples.extend_from_slice(&current.position);
        }
    }
    delta_h.sort_by(|a, b| a.total_cmp(b));
    let mut chain = Chain::from_samples(dim, samples, config.clone())?;
    chain.acceptance_rate = Some(accepted_kept as f64 / kept as f64);
    chain.burn_in_acceptance =
        (config.burn_in > 0).then(|| accepted_burn as f64 / config.burn_in as f64);
    chain.nonfinite = nonfinite;
    chain.median_abs_delta_h = delta_h[delta_h.len() / 2];
    if let Some(rate) = chain.burn_in_acceptance.filter(|&r| r < 0.05) {
        chain
            .warnings
            .push(format!("burn-in acceptance rate {rate:.3} is below 0.05"));
    }
    Ok(chain)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_leapfrog_step_by_hand() {
        let mut pot = StandardNormalPotential { dim: 1 };
        let start = PhasePoint::new(&mut pot, vec![1.0], vec![0.0]).unwrap();
        let end = leapfrog(&mut pot, &start, 0.1, 1).unwrap().unwrap();
        assert!((end.position[0] - 0.995).abs() < 1e-15);
        assert!((end.momentum[0] + 0.09975).abs() < 1e-15);
    }

    #[test]
    fn tiny_step_stays_put() {
        let mut pot = StandardNormalPotential { dim: 2 };
        let start = PhasePoint::new(&mut pot, vec![0.3, -0.2], vec![1.0, 0.5]).unwrap();
        let end = leapfrog(&mut pot, &start, 1e-12, 10).unwrap().unwrap();
        for (a, b) in end.position.iter().zip(&start.position) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn reversible() {
        let mut pot = StandardNormalPotential { dim: 3 };
        let start = PhasePoint::new(&mut pot, vec![0.3, -1.2, 2.0], vec![0.7, 0.1, -0.4]).unwrap();
        let mut end = leapfrog(&mut pot, &start, 0.05, 40).unwrap().unwrap();
        end.momentum.iter_mut().for_each(|p| *p = -*p);
        let back = leapfrog(&mut pot, &end, 0.05, 40).unwrap().unwrap();
        for (a, b) in back.position.iter().zip(&start.position) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn config_validation() {
        let mut c = HmcConfig::default();
        assert!(c.validate().is_ok());
        c.burn_in = c.total;
        assert!(c.validate().is_err());
        let c = HmcConfig {
            step_size: 0.0,
            ..HmcConfig::default()
        };
        assert!(c.validate().is_err());
    }
}
