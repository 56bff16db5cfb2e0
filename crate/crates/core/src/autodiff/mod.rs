//! Fixed-architecture MLP engine: second-order directional jets forward,
//! parameter gradients of jet-valued losses backward.

mod arch;
mod jet;
pub mod mlp;
mod tape;

pub use arch::{Activation, Architecture, LayerShape, NetworkParams};
pub use jet::{Direction, Jet, JetBatch, JetLayout};
pub use mlp::{forward, forward_batch, forward_jet, forward_with_hidden, UnitMask};
pub use tape::{
    grad_latent, grad_params, sum, Gradients, LatentId, Real, RecordedNet, SlotId, Tape, Var,
};
