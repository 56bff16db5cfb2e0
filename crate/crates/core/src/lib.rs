//! Physics-informed neural networks with three epistemic-uncertainty
//! back-ends: an epinet on a frozen base network, Monte Carlo dropout, and
//! Hamiltonian Monte Carlo over the network weights.

pub mod autodiff;
pub mod bayes;
pub mod models;
pub mod pde;
pub mod error;
pub mod experiment;
pub mod inverse;
pub mod rng;
pub mod training;
pub mod uq;

pub use error::{PinnError, Result};
