//! Uncertainty-bearing model families built on the MLP engine.

mod base;
mod checkpoint;
mod dropout;
mod epinet;
mod field;

pub use base::BasePinn;
pub use checkpoint::{read_checkpoint, write_checkpoint, CheckpointHeader};
pub use dropout::{dropout_forward, DropoutPinn};
pub use epinet::{
    base_features, epinn_forward, epinn_forward_jet, Epinet, EpinetConfig, EpinnPredictor,
    FrozenBase,
};
pub use field::TapeField;
