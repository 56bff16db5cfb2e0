use ndarray::{Array2, ArrayView2};

use super::PredictiveEnsemble;
use crate::autodiff::{forward_batch, Architecture, NetworkParams};
use crate::bayes::Chain;
use crate::error::{usage_err, Result};
use crate::models::{BasePinn, DropoutPinn, Epinet, EpinnPredictor};
use crate::rng::{stream, Stream};
use crate::training::draw_z;

/// A trained model that yields one predictive draw per ensemble member.
pub enum Predictor<'a> {
    Epinn { base: &'a BasePinn, epinet: &'a Epinet },
    Dropout(&'a DropoutPinn),
    /// Posterior samples; positions may carry a trailing latent entry.
    Bpinn { chain: &'a Chain, arch: &'a Architecture },
}

/// Draw `members` predictions of output `channel` at `points`.
///
/// E-PINN and dropout draw `members >= 2` indices or masks from the
/// prediction stream of `seed`. B-PINN uses every stored sample and ignores
/// `members` and `seed`.
pub fn mc_predict(
    predictor: &Predictor<'_>,
    points: ArrayView2<'_, f64>,
    members: usize,
    channel: usize,
    seed: u64,
) -> Result<PredictiveEnsemble> {
    if members < 2 && !matches!(predictor, Predictor::Bpinn { .. }) {
        return Err(usage_err("Monte Carlo prediction needs at least 2 members"));
    }
    let mut rng = stream(seed, Stream::Prediction);
    let mut out = Array2::zeros((members, points.nrows()));
    match predictor {
        Predictor::Epinn { base, epinet } => {
            check_channel(base.arch(), channel)?;
            let pred = EpinnPredictor::new(base, epinet, points)?;
            for mut row in out.rows_mut() {
                let z = draw_z(&mut rng, epinet.d_z());
                row.assign(&pred.sample(&z)?.column(channel));
            }
        }
        Predictor::Dropout(model) => {
            check_channel(model.params.arch(), channel)?;
            for mut row in out.rows_mut() {
                let mask = model.sample_mask(&mut rng);
                row.assign(&model.predict_masked(points, &mask)?.column(channel));
            }
        }
        Predictor::Bpinn { chain, arch } => {
            check_channel(arch, channel)?;
            if chain.is_empty() {
                return Err(usage_err("posterior prediction needs a non-empty chain"));
            }
            let n = arch.param_len();
            out = Array2::zeros((chain.len(), points.nrows()));
            for (i, mut row) in out.rows_mut().into_iter().enumerate() {
                let params = NetworkParams::from_flat(arch, chain.sample(i)[..n].to_vec())?;
                row.assign(&forward_batch(&params, points, None)?.column(channel));
            }
        }
    }
    PredictiveEnsemble::new(out)
}

fn check_channel(arch: &Architecture, channel: usize) -> Result<()> {
    if channel >= arch.output_dim {
        return Err(usage_err(format!(
            "output channel {channel} out of range for {} outputs",
            arch.output_dim
        )));
    }
    Ok(())
}
