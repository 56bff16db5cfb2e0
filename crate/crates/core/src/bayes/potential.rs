use serde::{Deserialize, Serialize};

use super::hmc::Potential;
use crate::autodiff::{sum, Architecture, NetworkParams, Tape};
use crate::error::{config_err, Result};
use crate::models::TapeField;
use crate::pde::{PdeProblem, PointSet};
use crate::training::{residuals, Batches, KappaSource};

/// Standard deviations of the Gaussian likelihood channels.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LikelihoodSpec {
    /// Interior `u` sensors.
    pub sigma_u: f64,
    /// PDE residual channel.
    pub sigma_f: f64,
    /// Boundary and initial values.
    pub sigma_b: f64,
}

impl LikelihoodSpec {
    pub fn new(sigma_u: f64) -> Self {
        LikelihoodSpec {
            sigma_u,
            sigma_f: 0.01,
            sigma_b: 0.01,
        }
    }
}

/// `-log posterior` of the network weights (and the diffusivity latent for
/// the inverse problem) under unit Gaussian priors.
pub struct PinnPotential {
    problem: PdeProblem,
    batches: Batches,
    arch: Architecture,
    spec: LikelihoodSpec,
}

impl PinnPotential {
    pub fn new(problem: &PdeProblem, points: &PointSet, arch: &Architecture, spec: LikelihoodSpec) -> Result<Self> {
        arch.validate()?;
        if arch.input_dim != problem.input_dim() || arch.output_dim != 1 {
            return Err(config_err("B-PINN nets map the problem input to a single u channel"));
        }
        let batches = Batches::new(problem, points)?;
        let channels = [
            (spec.sigma_u, batches.sensors.layout().n_points()),
            (spec.sigma_f, batches.collocation.layout().n_points()),
            (spec.sigma_b, batches.constraint.layout().n_points()),
        ];
        if channels.iter().any(|&(s, n)| n > 0 && !(s > 0.0 && s.is_finite())) {
            return Err(config_err(format!("likelihood sigmas must be positive, got {spec:?}")));
        }
        Ok(PinnPotential {
            problem: *problem,
            batches,
            arch: arch.clone(),
            spec,
        })
    }

    pub fn n_params(&self) -> usize {
        self.arch.param_len()
    }

    pub fn arch(&self) -> &Architecture {
        &self.arch
    }

    /// Position length: network parameters, then the latent if the problem has one.
    pub fn position_dim(&self) -> usize {
        self.n_params() + self.problem.is_inverse() as usize
    }
}

impl Potential for PinnPotential {
    fn dim(&self) -> usize {
        self.position_dim()
    }

    fn value_and_grad(&mut self, position: &[f64]) -> Result<(f64, Vec<f64>)> {
        let n = self.n_params();
        if position.len() != self.position_dim() {
            return Err(config_err("position length does not match the potential"));
        }
        let params = NetworkParams::from_flat(&self.arch, position[..n].to_vec())?;
        let tape = Tape::new();
        let slot = tape.register_params(n, true);
        let latent = self.problem.is_inverse().then(|| tape.latent(position[n]));
        let kappa = match latent {
            Some((_, k)) => KappaSource::Latent(k),
            None => KappaSource::Field,
        };
        let res = residuals(
            &self.problem,
            &self.batches,
            |input| Ok(TapeField::new(tape.record_net(slot, &params, input, None)?)),
            kappa,
        )?;
        let mut parts = Vec::new();
        for (vars, sigma) in [
            (&res.data, self.spec.sigma_u),
            (&res.pde, self.spec.sigma_f),
            (&res.bc, self.spec.sigma_b),
        ] {
            let squares: Vec<_> = vars.iter().map(|v| v.square()).collect();
            if let Some(s) = sum(&squares) {
                parts.push(s * (0.5 / (sigma * sigma)));
            }
        }
        if let Some((_, k)) = latent {
            parts.push(k.square() * 0.5);
        }
        let total = sum(&parts).unwrap_or_else(|| tape.constant(0.0));
        tape.finalize(total)?;
        let grads = tape.gradients()?;
        let mut grad = grads.slot(slot).to_vec();
        let mut value = total.val();
        for (g, &th) in grad.iter_mut().zip(&position[..n]) {
            *g += th;
            value += 0.5 * th * th;
        }
        if let Some((id, _)) = latent {
            grad.push(grads.latent(id)?);
        }
        Ok((value, grad))
    }
}
