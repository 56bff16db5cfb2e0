//! Composite physics-informed loss and Adam training for the three model families.

mod adam;
mod loss;
mod trainer;

pub use adam::Adam;
pub use loss::{
    composite_loss, kappa_penalty, residuals, Batches, KappaSource, LossTerms, LossWeights,
    Residuals,
};
pub use trainer::{
    base_loss_and_grad, draw_z, train_base, train_dropout, train_epinet, LogRow, TrainLog, TrainOptions,
    DIVERGENCE_BOUND,
};
