//! Forward jet propagation and reverse accumulation through a tanh MLP.
//!
//! Affine layers act on the whole jet stack at once (derivative rows get no
//! bias). Across `a = tanh(y)` the rules per direction are
//! `a' = s1 y'` and `a'' = s2 y'^2 + s1 y''` with `s1 = 1 - a^2`,
//! `s2 = -2 a s1`; the reverse sweep additionally needs `s3 = s1 (6 a^2 - 2)`.

use ndarray::{linalg::general_mat_mul, s, Array2, ArrayView2, ArrayViewMut2};

use super::arch::NetworkParams;
use super::jet::{Direction, Jet, JetBatch, JetLayout};
use crate::error::{config_err, Result};

/// Per-unit multiplicative scales applied after each hidden activation.
///
/// Each layer holds either one row shared by every point or one row per
/// point; a point's row scales its value and derivative rows alike.
#[derive(Clone, Debug, PartialEq)]
pub struct UnitMask {
    layers: Vec<Array2<f64>>,
}

impl UnitMask {
    /// One mask shared by every point.
    pub fn new(layers: Vec<Vec<f64>>) -> Self {
        UnitMask {
            layers: layers
                .into_iter()
                .map(|l| Array2::from_shape_vec((1, l.len()), l).expect("row"))
                .collect(),
        }
    }

    /// `layers[l]` has one row per point.
    pub fn per_point(layers: Vec<Array2<f64>>) -> Self {
        UnitMask { layers }
    }

    pub fn layers(&self) -> &[Array2<f64>] {
        &self.layers
    }

    fn check(&self, params: &NetworkParams, n_points: usize) -> Result<()> {
        let widths = &params.arch().hidden_widths;
        if self.layers.len() != widths.len()
            || self
                .layers
                .iter()
                .zip(widths)
                .any(|(m, &w)| m.ncols() != w || (m.nrows() != 1 && m.nrows() != n_points))
        {
            return Err(config_err("dropout mask does not match hidden widths and points"));
        }
        Ok(())
    }
}

/// Intermediates kept for the reverse sweep.
#[derive(Clone, Debug)]
pub struct ForwardCache {
    layout: JetLayout,
    inputs: Vec<Array2<f64>>,
    pre: Vec<Array2<f64>>,
    tanh: Vec<Array2<f64>>,
    mask: Option<UnitMask>,
}

impl ForwardCache {
    pub fn layout(&self) -> &JetLayout {
        &self.layout
    }
}

#[derive(Clone, Debug)]
pub struct Propagation {
    pub output: JetBatch,
    /// Post-activation jets of the last hidden layer (after any mask).
    pub last_hidden: JetBatch,
    pub cache: Option<ForwardCache>,
}

#[derive(Clone, Copy, Debug)]
enum Role {
    Value,
    First { second: Option<usize> },
    Second { first: usize },
}

fn roles(layout: &JetLayout) -> Vec<Role> {
    let mut roles = vec![Role::Value; layout.n_blocks()];
    for k in 0..layout.dirs().len() {
        let b1 = layout.d1_block(k);
        let b2 = layout.d2_block(k);
        roles[b1] = Role::First { second: b2 };
        if let Some(b2) = b2 {
            roles[b2] = Role::Second { first: b1 };
        }
    }
    roles
}

/// Run `input` through the network. With `record`, keep what the reverse sweep needs.
pub fn propagate(
    params: &NetworkParams,
    input: &JetBatch,
    mask: Option<&UnitMask>,
    record: bool,
) -> Result<Propagation> {
    let arch = params.arch();
    if input.width() != arch.input_dim {
        return Err(config_err(format!(
            "input width {} does not match network input dimension {}",
            input.width(),
            arch.input_dim
        )));
    }
    if let Some(m) = mask {
        m.check(params, input.layout().n_points())?;
    }
    let layout = input.layout().clone();
    let n = layout.n_points();
    let n_layers = params.layer_shapes().len();
    let mut cache = ForwardCache {
        layout: layout.clone(),
        inputs: Vec::new(),
        pre: Vec::new(),
        tanh: Vec::new(),
        mask: mask.cloned(),
    };
    let mut current = input.data().as_standard_layout().into_owned();
    for l in 0..n_layers {
        let w = params.weight(l);
        let mut y = Array2::zeros((current.nrows(), w.nrows()));
        general_mat_mul(1.0, &current, &w.t(), 0.0, &mut y);
        {
            let mut values = y.slice_mut(s![0..n, ..]);
            values += &params.bias(l);
        }
        if l + 1 == n_layers {
            let last_hidden = JetBatch::from_parts(layout.clone(), current)?;
            if record {
                cache.inputs.push(last_hidden.data().clone());
            }
            return Ok(Propagation {
                output: JetBatch::from_parts(layout, y)?,
                last_hidden,
                cache: record.then_some(cache),
            });
        }
        let (mut act, a) = tanh_forward(&y, &layout);
        if let Some(m) = mask {
            scale_units(&mut act, &m.layers[l], n);
        }
        if record {
            cache.inputs.push(current);
            cache.pre.push(y);
            cache.tanh.push(a);
        }
        current = act;
    }
    unreachable!("an architecture always has an output layer")
}

/// Accumulate `d loss / d params` into `grad` given `d loss / d output` rows.
pub fn backpropagate(
    params: &NetworkParams,
    cache: &ForwardCache,
    grad_output: ArrayView2<'_, f64>,
    grad: &mut [f64],
) -> Result<()> {
    let shapes = params.layer_shapes();
    if grad.len() != params.total_len() {
        return Err(config_err("gradient buffer length mismatch"));
    }
    if grad_output.dim() != (cache.layout.rows(), params.arch().output_dim) {
        return Err(config_err("output adjoint has the wrong shape"));
    }
    let n = cache.layout.n_points();
    let mut g = grad_output.to_owned();
    for l in (0..shapes.len()).rev() {
        let shape = shapes[l];
        let input = &cache.inputs[l];
        {
            let (weights, rest) = grad[shape.weight_offset..].split_at_mut(shape.fan_in * shape.fan_out);
            let mut dw = ArrayViewMut2::from_shape((shape.fan_out, shape.fan_in), weights)
                .expect("layer shape matches storage");
            general_mat_mul(1.0, &g.t(), input, 1.0, &mut dw);
            let db = &mut rest[..shape.fan_out];
            for row in g.slice(s![0..n, ..]).rows() {
                for (acc, v) in db.iter_mut().zip(row) {
                    *acc += v;
                }
            }
        }
        if l == 0 {
            break;
        }
        let w = params.weight(l);
        let mut g_in = Array2::zeros((g.nrows(), w.ncols()));
        general_mat_mul(1.0, &g, &w, 0.0, &mut g_in);
        if let Some(m) = &cache.mask {
            scale_units(&mut g_in, &m.layers[l - 1], n);
        }
        g = tanh_backward(&g_in, &cache.pre[l - 1], &cache.tanh[l - 1], &cache.layout);
    }
    Ok(())
}

/// Scale row `r` of a jet stack by the mask row of point `r % n`.
fn scale_units(a: &mut Array2<f64>, scales: &Array2<f64>, n: usize) {
    let shared = scales.nrows() == 1;
    for (r, mut row) in a.rows_mut().into_iter().enumerate() {
        let m = scales.row(if shared { 0 } else { r % n });
        row *= &m;
    }
}

fn tanh_forward(y: &Array2<f64>, layout: &JetLayout) -> (Array2<f64>, Array2<f64>) {
    let width = y.ncols();
    let block = layout.n_points() * width;
    let y = y.as_slice().expect("standard layout");
    let a: Vec<f64> = y[..block].iter().map(|v| v.tanh()).collect();
    let mut act = vec![0.0; y.len()];
    for (b, (out, role)) in act.chunks_mut(block.max(1)).zip(roles(layout)).enumerate() {
        let yb = &y[b * block..(b + 1) * block];
        match role {
            Role::Value => out.copy_from_slice(&a),
            Role::First { .. } => {
                for i in 0..block {
                    out[i] = (1.0 - a[i] * a[i]) * yb[i];
                }
            }
            Role::Second { first } => {
                let y1 = &y[first * block..(first + 1) * block];
                for i in 0..block {
                    let s1 = 1.0 - a[i] * a[i];
                    let s2 = -2.0 * a[i] * s1;
                    out[i] = s2 * y1[i] * y1[i] + s1 * yb[i];
                }
            }
        }
    }
    let rows = layout.rows();
    (
        Array2::from_shape_vec((rows, width), act).expect("shape"),
        Array2::from_shape_vec((layout.n_points(), width), a).expect("shape"),
    )
}

fn blk(v: &[f64], b: usize, block: usize) -> &[f64] {
    &v[b * block..(b + 1) * block]
}

fn tanh_backward(
    g: &Array2<f64>,
    y: &Array2<f64>,
    a: &Array2<f64>,
    layout: &JetLayout,
) -> Array2<f64> {
    let width = g.ncols();
    let block = layout.n_points() * width;
    let g = g.as_slice().expect("standard layout");
    let y = y.as_slice().expect("standard layout");
    let a = a.as_slice().expect("standard layout");
    let roles = roles(layout);
    let s1: Vec<f64> = a.iter().map(|a| 1.0 - a * a).collect();
    let s2: Vec<f64> = a.iter().zip(&s1).map(|(a, s1)| -2.0 * a * s1).collect();
    let s3: Vec<f64> = a
        .iter()
        .zip(&s1)
        .map(|(a, s1)| s1 * (6.0 * a * a - 2.0))
        .collect();
    let mut out = vec![0.0; g.len()];
    for (b, chunk) in out.chunks_mut(block.max(1)).enumerate() {
        let gb = blk(g, b, block);
        match roles[b] {
            Role::Value => {
                for i in 0..block {
                    chunk[i] = gb[i] * s1[i];
                }
                for (other, role) in roles.iter().enumerate() {
                    if let Role::First { second } = *role {
                        let g1 = blk(g, other, block);
                        let y1 = blk(y, other, block);
                        match second {
                            Some(b2) => {
                                let g2 = blk(g, b2, block);
                                let y2 = blk(y, b2, block);
                                for i in 0..block {
                                    chunk[i] += g1[i] * s2[i] * y1[i]
                                        + g2[i] * (s3[i] * y1[i] * y1[i] + s2[i] * y2[i]);
                                }
                            }
                            None => {
                                for i in 0..block {
                                    chunk[i] += g1[i] * s2[i] * y1[i];
                                }
                            }
                        }
                    }
                }
            }
            Role::First { second } => match second {
                Some(b2) => {
                    let g2 = blk(g, b2, block);
                    let y1 = blk(y, b, block);
                    for i in 0..block {
                        chunk[i] = gb[i] * s1[i] + 2.0 * g2[i] * s2[i] * y1[i];
                    }
                }
                None => {
                    for i in 0..block {
                        chunk[i] = gb[i] * s1[i];
                    }
                }
            },
            Role::Second { .. } => {
                for i in 0..block {
                    chunk[i] = gb[i] * s1[i];
                }
            }
        }
    }
    Array2::from_shape_vec((layout.rows(), width), out).expect("shape")
}

fn point_row(params: &NetworkParams, x: &[f64]) -> Result<Array2<f64>> {
    if x.len() != params.arch().input_dim {
        return Err(config_err(format!(
            "point has dimension {}, network expects {}",
            x.len(),
            params.arch().input_dim
        )));
    }
    Ok(Array2::from_shape_vec((1, x.len()), x.to_vec()).expect("shape"))
}

/// Plain evaluation at one point.
pub fn forward(params: &NetworkParams, x: &[f64]) -> Result<Vec<f64>> {
    Ok(forward_with_hidden(params, x)?.0)
}

/// Output together with the last-hidden-layer activations.
pub fn forward_with_hidden(params: &NetworkParams, x: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let row = point_row(params, x)?;
    let input = JetBatch::from_points(row.view(), &[])?;
    let p = propagate(params, &input, None, false)?;
    Ok((p.output.values().row(0).to_vec(), p.last_hidden.values().row(0).to_vec()))
}

/// Output jets along coordinate `axis`, plus jets of the last hidden layer.
pub fn forward_jet(params: &NetworkParams, x: &[f64], axis: usize) -> Result<(Vec<Jet>, Vec<Jet>)> {
    let row = point_row(params, x)?;
    let input = JetBatch::from_points(row.view(), &[Direction::second(axis)])?;
    let p = propagate(params, &input, None, false)?;
    let out = (0..p.output.width()).map(|c| p.output.jet(0, c, 0)).collect();
    let hidden = (0..p.last_hidden.width())
        .map(|c| p.last_hidden.jet(0, c, 0))
        .collect();
    Ok((out, hidden))
}

/// Values only for a batch of points.
pub fn forward_batch(
    params: &NetworkParams,
    points: ArrayView2<'_, f64>,
    mask: Option<&UnitMask>,
) -> Result<Array2<f64>> {
    let input = JetBatch::from_points(points, &[])?;
    Ok(propagate(params, &input, mask, false)?.output.into_data())
}
