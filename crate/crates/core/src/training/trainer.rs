use std::path::Path;
use std::time::Instant;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::adam::Adam;
use super::loss::{composite_loss, residuals, Batches, KappaSource, LossTerms, LossWeights};
use crate::autodiff::{grad_params, NetworkParams, Tape};
use crate::error::{config_err, PinnError, Result};
use crate::models::{BasePinn, DropoutPinn, Epinet, FrozenBase, TapeField};
use crate::pde::{PdeProblem, PointSet};
use crate::rng::{stream, Stream};

/// Losses above this are treated as divergence.
pub const DIVERGENCE_BOUND: f64 = 1e8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainOptions {
    pub epochs: usize,
    pub lr: f64,
    #[serde(default)]
    pub weights: LossWeights,
    pub log_every: usize,
}

impl TrainOptions {
    pub fn new(epochs: usize) -> Self {
        TrainOptions {
            epochs,
            lr: 1e-3,
            weights: LossWeights::default(),
            log_every: 100,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LogRow {
    pub epoch: usize,
    pub total: f64,
    pub data: f64,
    pub pde: f64,
    pub bc: f64,
    pub kappa: f64,
    pub wall_seconds: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainLog {
    /// Sampled every `log_every` epochs and at the last epoch.
    pub rows: Vec<LogRow>,
    /// Total loss at every epoch, before that epoch's update.
    pub epoch_losses: Vec<f64>,
    pub seconds: f64,
}

impl TrainLog {
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["epoch", "L_total", "L_data", "L_pde", "L_bc", "L_kappa", "wall_seconds"])?;
        for r in &self.rows {
            w.write_record([
                r.epoch.to_string(),
                r.total.to_string(),
                r.data.to_string(),
                r.pde.to_string(),
                r.bc.to_string(),
                r.kappa.to_string(),
                r.wall_seconds.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Full-batch Adam on `params`. `epoch_loss` builds and finalizes the loss
/// for one epoch on the tape it is handed.
fn run<F>(
    params: &mut NetworkParams,
    opts: &TrainOptions,
    log: &mut TrainLog,
    mut epoch_loss: F,
) -> Result<()>
where
    F: FnMut(usize, &Tape, &NetworkParams) -> Result<LossTerms>,
{
    opts.weights.validate()?;
    if !(opts.lr > 0.0 && opts.lr.is_finite()) {
        return Err(config_err(format!("learning rate must be positive, got {}", opts.lr)));
    }
    let start = Instant::now();
    let mut adam = Adam::new(params.total_len(), opts.lr);
    let log_every = opts.log_every.max(1);
    for epoch in 0..opts.epochs {
        let tape = Tape::new();
        let terms = epoch_loss(epoch, &tape, params)?;
        let t = start.elapsed().as_secs_f64();
        log.epoch_losses.push(terms.total);
        if epoch % log_every == 0 || epoch + 1 == opts.epochs {
            log.rows.push(LogRow {
                epoch,
                total: terms.total,
                data: terms.data,
                pde: terms.pde,
                bc: terms.bc,
                kappa: terms.kappa,
                wall_seconds: t,
            });
        }
        if !terms.total.is_finite() || terms.total > DIVERGENCE_BOUND {
            log.seconds = t;
            return Err(PinnError::Diverged {
                epoch,
                reason: format!("loss {}", terms.total),
            });
        }
        let grad = grad_params(&tape)?;
        adam.step(params.as_mut_slice(), &grad).map_err(|e| match e {
            PinnError::Diverged { reason, .. } => PinnError::Diverged { epoch, reason },
            other => other,
        })?;
    }
    log.seconds = start.elapsed().as_secs_f64();
    Ok(())
}

/// Train the plain PINN.
pub fn train_base(
    base: &mut BasePinn,
    problem: &PdeProblem,
    points: &PointSet,
    opts: &TrainOptions,
    log: &mut TrainLog,
) -> Result<()> {
    let batches = Batches::new(problem, points)?;
    run(&mut base.params, opts, log, |_, tape, params| {
        record_base_loss(tape, problem, &batches, params, &opts.weights)
    })
}

/// Composite loss of a plain PINN at `params` and its parameter gradient.
pub fn base_loss_and_grad(
    problem: &PdeProblem,
    batches: &Batches,
    params: &NetworkParams,
    weights: &LossWeights,
) -> Result<(LossTerms, Vec<f64>)> {
    let tape = Tape::new();
    let terms = record_base_loss(&tape, problem, batches, params, weights)?;
    Ok((terms, grad_params(&tape)?))
}

fn record_base_loss(
    tape: &Tape,
    problem: &PdeProblem,
    batches: &Batches,
    params: &NetworkParams,
    weights: &LossWeights,
) -> Result<LossTerms> {
    let slot = tape.register_params(params.total_len(), true);
    let res = residuals(
        problem,
        batches,
        |input| Ok(TapeField::new(tape.record_net(slot, params, input, None)?)),
        KappaSource::Field,
    )?;
    composite_loss(tape, &res, weights)
}

pub fn draw_z<R: Rng + ?Sized>(rng: &mut R, d_z: usize) -> Vec<f64> {
    (0..d_z).map(|_| rng.sample(StandardNormal)).collect()
}

/// Train the learnable epinet with the base frozen; one `z` per epoch.
pub fn train_epinet(
    base: &BasePinn,
    epinet: &mut Epinet,
    problem: &PdeProblem,
    points: &PointSet,
    opts: &TrainOptions,
    seed: u64,
    log: &mut TrainLog,
) -> Result<()> {
    let batches = Batches::new(problem, points)?;
    let frozen = [&batches.collocation, &batches.constraint, &batches.sensors]
        .map(|b| FrozenBase::new(base, b));
    let [fc, fb, fs] = frozen;
    let (fc, fb, fs) = (fc?, fb?, fs?);
    let mut rng = stream(seed, Stream::EpistemicIndex);
    let shell = epinet.clone();
    let d_z = epinet.d_z();
    run(&mut epinet.learnable, opts, log, |_, tape, params| {
        let z = draw_z(&mut rng, d_z);
        let slot = tape.register_params(params.total_len(), true);
        let net = Epinet::from_parts(shell.config().clone(), params.clone(), shell.prior().clone())?;
        let res = residuals(
            problem,
            &batches,
            |input| {
                let frozen = if std::ptr::eq(input, &batches.collocation) {
                    &fc
                } else if std::ptr::eq(input, &batches.constraint) {
                    &fb
                } else {
                    &fs
                };
                net.record_frozen(tape, slot, frozen, &z)
            },
            KappaSource::Field,
        )?;
        composite_loss(tape, &res, &opts.weights)
    })
}

/// Train a dropout PINN; every epoch draws a fresh mask for each training
/// point.
pub fn train_dropout(
    model: &mut DropoutPinn,
    problem: &PdeProblem,
    points: &PointSet,
    opts: &TrainOptions,
    seed: u64,
    log: &mut TrainLog,
) -> Result<()> {
    let batches = Batches::new(problem, points)?;
    let mut rng = stream(seed, Stream::DropoutMask);
    let rate = model.rate();
    run(&mut model.params, opts, log, |_, tape, params| {
        let shell = DropoutPinn::from_params(params.clone(), rate)?;
        let slot = tape.register_params(params.total_len(), true);
        let res = residuals(
            problem,
            &batches,
            |input| {
                let mask = shell.sample_point_masks(&mut rng, input.layout().n_points());
                Ok(TapeField::new(tape.record_net(slot, params, input, Some(&mask))?))
            },
            KappaSource::Field,
        )?;
        composite_loss(tape, &res, &opts.weights)
    })
}
