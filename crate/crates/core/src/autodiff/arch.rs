use ndarray::{ArrayView1, ArrayView2, ArrayViewMut1, ArrayViewMut2};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{config_err, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Tanh,
}

/// Shape of a fully connected network: tanh hidden layers, linear output layer.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    pub input_dim: usize,
    pub hidden_widths: Vec<usize>,
    pub output_dim: usize,
    #[serde(default)]
    pub activation: Activation,
}

/// Offsets of one affine layer inside the flat parameter vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LayerShape {
    pub fan_in: usize,
    pub fan_out: usize,
    pub weight_offset: usize,
    pub bias_offset: usize,
}

impl LayerShape {
    pub fn len(&self) -> usize {
        self.fan_in * self.fan_out + self.fan_out
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl Architecture {
    pub fn new(input_dim: usize, hidden_widths: Vec<usize>, output_dim: usize) -> Result<Self> {
        let arch = Architecture {
            input_dim,
            hidden_widths,
            output_dim,
            activation: Activation::Tanh,
        };
        arch.validate()?;
        Ok(arch)
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.output_dim == 0 {
            return Err(config_err("network input and output widths must be >= 1"));
        }
        if self.hidden_widths.iter().any(|&w| w == 0) {
            return Err(config_err(format!(
                "hidden widths must be >= 1, got {:?}",
                self.hidden_widths
            )));
        }
        Ok(())
    }

    /// Layer shapes from input to output. The last entry is the linear head.
    pub fn layers(&self) -> Vec<LayerShape> {
        let mut dims = Vec::with_capacity(self.hidden_widths.len() + 2);
        dims.push(self.input_dim);
        dims.extend_from_slice(&self.hidden_widths);
        dims.push(self.output_dim);
        let mut offset = 0;
        dims.windows(2)
            .map(|w| {
                let shape = LayerShape {
                    fan_in: w[0],
                    fan_out: w[1],
                    weight_offset: offset,
                    bias_offset: offset + w[0] * w[1],
                };
                offset += shape.len();
                shape
            })
            .collect()
    }

    pub fn param_len(&self) -> usize {
        self.layers().iter().map(LayerShape::len).sum()
    }

    /// Width of the layer whose activations feed the output head.
    pub fn last_hidden_width(&self) -> usize {
        self.hidden_widths.last().copied().unwrap_or(self.input_dim)
    }
}

/// Flat parameter vector of an MLP, weights stored row-major `(fan_out, fan_in)`
/// followed by the bias, layer after layer.
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkParams {
    arch: Architecture,
    layers: Vec<LayerShape>,
    values: Vec<f64>,
}

impl NetworkParams {
    pub fn zeros(arch: &Architecture) -> Result<Self> {
        arch.validate()?;
        let values = vec![0.0; arch.param_len()];
        Ok(Self::from_parts(arch.clone(), values))
    }

    pub fn from_flat(arch: &Architecture, values: Vec<f64>) -> Result<Self> {
        arch.validate()?;
        if values.len() != arch.param_len() {
            return Err(config_err(format!(
                "parameter vector has length {}, architecture needs {}",
                values.len(),
                arch.param_len()
            )));
        }
        Ok(Self::from_parts(arch.clone(), values))
    }

    fn from_parts(arch: Architecture, values: Vec<f64>) -> Self {
        let layers = arch.layers();
        NetworkParams {
            arch,
            layers,
            values,
        }
    }

    /// Xavier-normal weights with zero biases.
    pub fn xavier<R: Rng + ?Sized>(arch: &Architecture, rng: &mut R) -> Result<Self> {
        let mut params = Self::zeros(arch)?;
        for l in 0..params.layers.len() {
            let shape = params.layers[l];
            let std = xavier_std(shape);
            let normal = Normal::new(0.0, std).expect("finite std");
            for w in params.weights_flat_mut(l) {
                *w = normal.sample(rng);
            }
        }
        Ok(params)
    }

    /// Xavier-normal draw for weights and biases alike.
    pub fn xavier_with_biases<R: Rng + ?Sized>(arch: &Architecture, rng: &mut R) -> Result<Self> {
        let mut params = Self::zeros(arch)?;
        for l in 0..params.layers.len() {
            let shape = params.layers[l];
            let normal = Normal::new(0.0, xavier_std(shape)).expect("finite std");
            let range = shape.weight_offset..shape.bias_offset + shape.fan_out;
            for v in &mut params.values[range] {
                *v = normal.sample(rng);
            }
        }
        Ok(params)
    }

    pub fn arch(&self) -> &Architecture {
        &self.arch
    }

    pub fn layer_shapes(&self) -> &[LayerShape] {
        &self.layers
    }

    pub fn total_len(&self) -> usize {
        self.values.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_flat(self) -> Vec<f64> {
        self.values
    }

    pub fn weight(&self, layer: usize) -> ArrayView2<'_, f64> {
        let s = self.layers[layer];
        ArrayView2::from_shape((s.fan_out, s.fan_in), &self.values[s.weight_offset..s.bias_offset])
            .expect("layer shape matches storage")
    }

    pub fn bias(&self, layer: usize) -> ArrayView1<'_, f64> {
        let s = self.layers[layer];
        ArrayView1::from(&self.values[s.bias_offset..s.bias_offset + s.fan_out])
    }

    pub fn weight_mut(&mut self, layer: usize) -> ArrayViewMut2<'_, f64> {
        let s = self.layers[layer];
        ArrayViewMut2::from_shape(
            (s.fan_out, s.fan_in),
            &mut self.values[s.weight_offset..s.bias_offset],
        )
        .expect("layer shape matches storage")
    }

    pub fn bias_mut(&mut self, layer: usize) -> ArrayViewMut1<'_, f64> {
        let s = self.layers[layer];
        ArrayViewMut1::from(&mut self.values[s.bias_offset..s.bias_offset + s.fan_out])
    }

    fn weights_flat_mut(&mut self, layer: usize) -> &mut [f64] {
        let s = self.layers[layer];
        &mut self.values[s.weight_offset..s.bias_offset]
    }

    /// Per-layer `(weight, bias)` copies.
    pub fn to_layers(&self) -> Vec<(ndarray::Array2<f64>, ndarray::Array1<f64>)> {
        (0..self.layers.len())
            .map(|l| (self.weight(l).to_owned(), self.bias(l).to_owned()))
            .collect()
    }

    pub fn from_layers(
        arch: &Architecture,
        layers: &[(ndarray::Array2<f64>, ndarray::Array1<f64>)],
    ) -> Result<Self> {
        let mut params = Self::zeros(arch)?;
        if layers.len() != params.layers.len() {
            return Err(config_err(format!(
                "expected {} layers, got {}",
                params.layers.len(),
                layers.len()
            )));
        }
        for (l, (w, b)) in layers.iter().enumerate() {
            let s = params.layers[l];
            if w.dim() != (s.fan_out, s.fan_in) || b.len() != s.fan_out {
                return Err(config_err(format!("layer {l} has mismatched shape")));
            }
            params.weight_mut(l).assign(w);
            params.bias_mut(l).assign(b);
        }
        Ok(params)
    }
}

fn xavier_std(shape: LayerShape) -> f64 {
    (2.0 / (shape.fan_in + shape.fan_out) as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Stream};

    #[test]
    fn flat_length_matches_layer_sum() {
        let arch = Architecture::new(1, vec![32, 32, 32], 1).unwrap();
        assert_eq!(arch.param_len(), (32 + 32) + (32 * 32 + 32) * 2 + (32 + 1));
        let arch = Architecture::new(3, vec![5], 2).unwrap();
        assert_eq!(arch.param_len(), 3 * 5 + 5 + 5 * 2 + 2);
    }

    #[test]
    fn zero_width_rejected() {
        assert!(Architecture::new(1, vec![4, 0], 1).is_err());
        assert!(Architecture::new(0, vec![4], 1).is_err());
    }

    #[test]
    fn layers_round_trip() {
        let arch = Architecture::new(2, vec![3, 4], 2).unwrap();
        let mut rng = stream(7, Stream::Init);
        let p = NetworkParams::xavier_with_biases(&arch, &mut rng).unwrap();
        let back = NetworkParams::from_layers(&arch, &p.to_layers()).unwrap();
        assert_eq!(p, back);
    }

    #[test]
    fn wrong_flat_length() {
        let arch = Architecture::new(1, vec![2], 1).unwrap();
        assert!(NetworkParams::from_flat(&arch, vec![0.0; 3]).is_err());
    }
}
