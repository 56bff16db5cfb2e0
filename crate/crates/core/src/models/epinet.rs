use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use super::{BasePinn, TapeField};
use crate::autodiff::mlp::propagate;
use crate::autodiff::{Architecture, Direction, Jet, JetBatch, NetworkParams, SlotId, Tape};
use crate::error::{config_err, usage_err, Result};
use crate::rng::{stream, Stream};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpinetConfig {
    pub hidden: Vec<usize>,
    pub prior_hidden: Vec<usize>,
    /// Scale of the frozen prior net.
    pub alpha: f64,
    /// Dimension of the epistemic index `z`.
    pub d_z: usize,
}

impl Default for EpinetConfig {
    fn default() -> Self {
        EpinetConfig {
            hidden: vec![32, 32, 32],
            prior_hidden: vec![5, 5],
            alpha: 0.05,
            d_z: 8,
        }
    }
}

/// Learnable net `e^L` plus frozen prior net `e^P`, both reading `[x, h(x), z]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Epinet {
    config: EpinetConfig,
    pub learnable: NetworkParams,
    prior: NetworkParams,
}

impl Epinet {
    /// Both nets draw Xavier-normal weights and biases, from separate streams.
    pub fn new(config: EpinetConfig, base: &Architecture, seed: u64) -> Result<Self> {
        if config.d_z == 0 {
            return Err(config_err("epistemic index dimension must be >= 1"));
        }
        if !(config.alpha >= 0.0 && config.alpha.is_finite()) {
            return Err(config_err(format!("alpha must be finite and >= 0, got {}", config.alpha)));
        }
        let input_dim = base.input_dim + base.last_hidden_width() + config.d_z;
        let learn_arch = Architecture::new(input_dim, config.hidden.clone(), base.output_dim)?;
        let prior_arch = Architecture::new(input_dim, config.prior_hidden.clone(), base.output_dim)?;
        let learnable = NetworkParams::xavier_with_biases(&learn_arch, &mut stream(seed, Stream::EpinetInit))?;
        let prior = NetworkParams::xavier_with_biases(&prior_arch, &mut stream(seed, Stream::PriorInit))?;
        Ok(Epinet {
            config,
            learnable,
            prior,
        })
    }

    /// Rebuild from stored parameter vectors.
    pub fn from_parts(config: EpinetConfig, learnable: NetworkParams, prior: NetworkParams) -> Result<Self> {
        if learnable.arch().input_dim != prior.arch().input_dim
            || learnable.arch().output_dim != prior.arch().output_dim
            || prior.arch().hidden_widths != config.prior_hidden
            || learnable.arch().hidden_widths != config.hidden
        {
            return Err(config_err("epinet nets do not match the configuration"));
        }
        Ok(Epinet {
            config,
            learnable,
            prior,
        })
    }

    pub fn config(&self) -> &EpinetConfig {
        &self.config
    }

    pub fn prior(&self) -> &NetworkParams {
        &self.prior
    }

    pub fn d_z(&self) -> usize {
        self.config.d_z
    }

    fn check_z(&self, z: &[f64]) -> Result<()> {
        if z.len() != self.config.d_z {
            return Err(usage_err(format!(
                "epistemic index has length {}, epinet expects {}",
                z.len(),
                self.config.d_z
            )));
        }
        Ok(())
    }

    fn input(&self, features: &JetBatch, z: &[f64]) -> Result<JetBatch> {
        self.check_z(z)?;
        if features.width() + z.len() != self.learnable.arch().input_dim {
            return Err(config_err("feature width does not match the epinet input"));
        }
        let n = features.layout().n_points();
        let zs = ArrayView2::from_shape((1, z.len()), z).expect("row");
        let zs = zs.broadcast((n, z.len())).expect("broadcast");
        let zb = JetBatch::constant(zs, features.layout())?;
        JetBatch::hcat(&[features, &zb])
    }

    /// `e^L + alpha e^P` on a batch of feature jets.
    pub fn correction(&self, features: &JetBatch, z: &[f64]) -> Result<JetBatch> {
        let input = self.input(features, z)?;
        let learn = propagate(&self.learnable, &input, None, false)?.output;
        let prior = propagate(&self.prior, &input, None, false)?.output;
        let data = learn.into_data() + &(prior.into_data() * self.config.alpha);
        JetBatch::from_parts(input.layout().clone(), data)
    }

    /// Record `u_xi + e^L + alpha e^P` on `input` jets.
    ///
    /// The base net goes into `base_slot`, which must be frozen: its outputs
    /// and hidden features enter as leaves and no adjoint reaches `xi`.
    pub fn record<'t>(
        &self,
        tape: &'t Tape,
        base_slot: SlotId,
        learn_slot: SlotId,
        base: &BasePinn,
        input: &JetBatch,
        z: &[f64],
    ) -> Result<TapeField<'t>> {
        let base_rec = tape.record_net(base_slot, &base.params, input, None)?;
        let features = JetBatch::hcat(&[input, &base_rec.last_hidden])?;
        let mut field = self.record_learnable(tape, learn_slot, &features, z, None)?;
        field.add_part(base_rec);
        Ok(field)
    }

    /// Same field as [`Epinet::record`] from a precomputed [`FrozenBase`].
    pub fn record_frozen<'t>(
        &self,
        tape: &'t Tape,
        learn_slot: SlotId,
        frozen: &FrozenBase,
        z: &[f64],
    ) -> Result<TapeField<'t>> {
        self.record_learnable(tape, learn_slot, &frozen.features, z, Some(frozen.output.data()))
    }

    fn record_learnable<'t>(
        &self,
        tape: &'t Tape,
        learn_slot: SlotId,
        features: &JetBatch,
        z: &[f64],
        base_output: Option<&Array2<f64>>,
    ) -> Result<TapeField<'t>> {
        let eps_input = self.input(features, z)?;
        let learn = tape.record_net(learn_slot, &self.learnable, &eps_input, None)?;
        let prior = propagate(&self.prior, &eps_input, None, false)?.output;
        let mut offset = prior.into_data() * self.config.alpha;
        if let Some(b) = base_output {
            offset += b;
        }
        Ok(TapeField::with_offset(learn, offset))
    }
}

/// Base output and augmented feature jets `[x, h(x)]` for a fixed batch.
#[derive(Clone, Debug)]
pub struct FrozenBase {
    pub output: JetBatch,
    pub features: JetBatch,
}

impl FrozenBase {
    pub fn new(base: &BasePinn, input: &JetBatch) -> Result<Self> {
        let b = propagate(&base.params, input, None, false)?;
        Ok(FrozenBase {
            features: JetBatch::hcat(&[input, &b.last_hidden])?,
            output: b.output,
        })
    }
}

/// Augmented features `[x, h(x; xi)]` at one point.
pub fn base_features(base: &BasePinn, x: &[f64]) -> Result<Vec<f64>> {
    let (_, hidden) = crate::autodiff::forward_with_hidden(&base.params, x)?;
    let mut out = x.to_vec();
    out.extend(hidden);
    Ok(out)
}

fn point_batch(x: &[f64], dirs: &[Direction]) -> Result<JetBatch> {
    let row = ArrayView2::from_shape((1, x.len()), x).expect("row");
    JetBatch::from_points(row, dirs)
}

fn epinn_batch(base: &BasePinn, epinet: &Epinet, input: &JetBatch, z: &[f64]) -> Result<JetBatch> {
    epinet.check_z(z)?;
    let b = propagate(&base.params, input, None, false)?;
    let features = JetBatch::hcat(&[input, &b.last_hidden])?;
    let corr = epinet.correction(&features, z)?;
    JetBatch::from_parts(input.layout().clone(), b.output.into_data() + corr.data())
}

/// `u_theta(x, z)` for every output channel.
pub fn epinn_forward(base: &BasePinn, epinet: &Epinet, x: &[f64], z: &[f64]) -> Result<Vec<f64>> {
    let out = epinn_batch(base, epinet, &point_batch(x, &[])?, z)?;
    Ok(out.values().row(0).to_vec())
}

/// Jets of `u_theta(x, z)` along `axis`, with derivatives through the feature path.
pub fn epinn_forward_jet(
    base: &BasePinn,
    epinet: &Epinet,
    x: &[f64],
    z: &[f64],
    axis: usize,
) -> Result<Vec<Jet>> {
    let out = epinn_batch(base, epinet, &point_batch(x, &[Direction::second(axis)])?, z)?;
    Ok((0..out.width()).map(|c| out.jet(0, c, 0)).collect())
}

/// Repeated E-PINN evaluation at fixed points for many `z`.
///
/// The part of the first epinet layer that sees `[x, h(x)]` is computed once.
pub struct EpinnPredictor<'a> {
    epinet: &'a Epinet,
    base_out: Array2<f64>,
    learn_pre: Array2<f64>,
    prior_pre: Array2<f64>,
}

impl<'a> EpinnPredictor<'a> {
    pub fn new(base: &BasePinn, epinet: &'a Epinet, points: ArrayView2<'_, f64>) -> Result<Self> {
        let input = JetBatch::from_points(points, &[])?;
        let b = propagate(&base.params, &input, None, false)?;
        let features = JetBatch::hcat(&[&input, &b.last_hidden])?.into_data();
        let n_feat = features.ncols();
        let pre = |p: &NetworkParams| {
            let w = p.weight(0);
            let mut y = features.dot(&w.slice(ndarray::s![.., ..n_feat]).t());
            y += &p.bias(0);
            y
        };
        Ok(EpinnPredictor {
            epinet,
            learn_pre: pre(&epinet.learnable),
            prior_pre: pre(&epinet.prior),
            base_out: b.output.into_data(),
        })
    }

    pub fn n_points(&self) -> usize {
        self.base_out.nrows()
    }

    /// Predictions for one index `z`, shape `(n_points, output_dim)`.
    pub fn sample(&self, z: &[f64]) -> Result<Array2<f64>> {
        self.epinet.check_z(z)?;
        let learn = finish(&self.epinet.learnable, &self.learn_pre, z);
        let prior = finish(&self.epinet.prior, &self.prior_pre, z);
        Ok(&self.base_out + &learn + &(prior * self.epinet.config.alpha))
    }
}

/// Complete a network whose first affine layer has been applied except for
/// the trailing `z` columns.
fn finish(params: &NetworkParams, pre: &Array2<f64>, z: &[f64]) -> Array2<f64> {
    let w0 = params.weight(0);
    let n_feat = w0.ncols() - z.len();
    let shift = w0
        .slice(ndarray::s![.., n_feat..])
        .dot(&ndarray::ArrayView1::from(z));
    let mut h = pre + &shift;
    h.mapv_inplace(f64::tanh);
    let n_layers = params.layer_shapes().len();
    for l in 1..n_layers {
        let mut y = h.dot(&params.weight(l).t());
        y += &params.bias(l);
        if l + 1 < n_layers {
            y.mapv_inplace(f64::tanh);
        }
        h = y;
    }
    h
}
