use ndarray::{Array2, ArrayView2};

use crate::autodiff::{forward_batch, Architecture, NetworkParams};
use crate::error::Result;
use crate::rng::{stream, Stream};

/// Plain PINN surrogate `u_xi(x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct BasePinn {
    pub params: NetworkParams,
}

impl BasePinn {
    /// Xavier-normal draw for weights and biases.
    pub fn new(arch: &Architecture, seed: u64) -> Result<Self> {
        let mut rng = stream(seed, Stream::Init);
        Ok(BasePinn {
            params: NetworkParams::xavier_with_biases(arch, &mut rng)?,
        })
    }

    pub fn arch(&self) -> &Architecture {
        self.params.arch()
    }

    pub fn predict(&self, points: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        forward_batch(&self.params, points, None)
    }
}
