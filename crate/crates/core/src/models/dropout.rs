use ndarray::{Array2, ArrayView2};
use rand::Rng;

use super::BasePinn;
use crate::autodiff::{forward_batch, Architecture, NetworkParams, UnitMask};
use crate::error::{config_err, Result};

/// PINN with inverted dropout after every hidden activation.
#[derive(Clone, Debug, PartialEq)]
pub struct DropoutPinn {
    pub params: NetworkParams,
    rate: f64,
}

impl DropoutPinn {
    pub fn new(arch: &Architecture, rate: f64, seed: u64) -> Result<Self> {
        let base = BasePinn::new(arch, seed)?;
        Self::from_params(base.params, rate)
    }

    pub fn from_params(params: NetworkParams, rate: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&rate) {
            return Err(config_err(format!("dropout rate must lie in [0, 1), got {rate}")));
        }
        Ok(DropoutPinn { params, rate })
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    /// One sub-network: each hidden unit survives with probability `1 - p`
    /// and is then scaled by `1 / (1 - p)`.
    pub fn sample_mask<R: Rng + ?Sized>(&self, rng: &mut R) -> UnitMask {
        let layers = self.draw_layers(rng, 1);
        UnitMask::per_point(layers)
    }

    /// Independent masks for each of `n` points, as a batched dropout layer
    /// draws them.
    pub fn sample_point_masks<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> UnitMask {
        UnitMask::per_point(self.draw_layers(rng, n))
    }

    fn draw_layers<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Vec<Array2<f64>> {
        let keep = 1.0 - self.rate;
        self.params
            .arch()
            .hidden_widths
            .iter()
            .map(|&w| {
                Array2::from_shape_simple_fn((n, w), || {
                    if self.rate == 0.0 || rng.random::<f64>() < keep {
                        1.0 / keep
                    } else {
                        0.0
                    }
                })
            })
            .collect()
    }

    pub fn predict_masked(&self, points: ArrayView2<'_, f64>, mask: &UnitMask) -> Result<Array2<f64>> {
        forward_batch(&self.params, points, Some(mask))
    }
}

/// Evaluate at `x` under a freshly drawn mask.
pub fn dropout_forward<R: Rng + ?Sized>(model: &DropoutPinn, x: &[f64], rng: &mut R) -> Result<Vec<f64>> {
    let mask = model.sample_mask(rng);
    let row = ArrayView2::from_shape((1, x.len()), x).map_err(|e| config_err(e.to_string()))?;
    Ok(model.predict_masked(row, &mask)?.row(0).to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::forward;
    use crate::rng::{stream, Stream};

    #[test]
    fn rate_bounds() {
        let arch = Architecture::new(1, vec![4], 1).unwrap();
        assert!(DropoutPinn::new(&arch, 1.0, 0).is_err());
        assert!(DropoutPinn::new(&arch, -0.1, 0).is_err());
        assert!(DropoutPinn::new(&arch, 0.0, 0).is_ok());
    }

    #[test]
    fn zero_rate_is_plain_forward() {
        let arch = Architecture::new(1, vec![5, 5], 1).unwrap();
        let m = DropoutPinn::new(&arch, 0.0, 2).unwrap();
        let mut rng = stream(0, Stream::DropoutMask);
        assert_eq!(
            dropout_forward(&m, &[0.2], &mut rng).unwrap(),
            forward(&m.params, &[0.2]).unwrap()
        );
    }

    #[test]
    fn surviving_units_are_doubled_at_half_rate() {
        // one hidden unit, identity readout: output = mask * tanh(w x + b)
        let arch = Architecture::new(1, vec![1], 1).unwrap();
        let params = NetworkParams::from_flat(&arch, vec![1.0, 0.0, 1.0, 0.0]).unwrap();
        let m = DropoutPinn::from_params(params, 0.5).unwrap();
        let all = UnitMask::new(vec![vec![2.0]]);
        let x = ndarray::array![[0.3]];
        let out = m.predict_masked(x.view(), &all).unwrap()[[0, 0]];
        assert_eq!(out, 2.0 * 0.3f64.tanh());
    }
}
