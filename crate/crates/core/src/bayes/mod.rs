//! B-PINN posterior sampling with Hamiltonian Monte Carlo.

mod dump;
mod hmc;
mod potential;

pub use dump::{read_chain, write_chain, ChainHeader};
pub use hmc::{leapfrog, sample, Chain, HmcConfig, PhasePoint, Potential, StandardNormalPotential};
pub use potential::{LikelihoodSpec, PinnPotential};

use ndarray::ArrayView2;

use crate::autodiff::Architecture;
use crate::error::{usage_err, Result};
use crate::uq::{mc_predict, PredictiveEnsemble, Predictor};

/// Evaluate every stored network on `points`; no observation noise is added.
pub fn posterior_predict(chain: &Chain, arch: &Architecture, points: ArrayView2<'_, f64>) -> Result<PredictiveEnsemble> {
    mc_predict(&Predictor::Bpinn { chain, arch }, points, chain.len(), 0, 0)
}

/// Latent entry (last coordinate) of every sample, for the inverse problem.
pub fn latent_draws(chain: &Chain, arch: &Architecture) -> Result<Vec<f64>> {
    if chain.dim() != arch.param_len() + 1 {
        return Err(usage_err("chain positions carry no latent coordinate"));
    }
    Ok((0..chain.len()).map(|i| chain.sample(i)[chain.dim() - 1]).collect())
}
