//! Reverse-mode tape for losses built on network jets.
//!
//! Scalar arithmetic is recorded node by node. A network evaluation is
//! recorded as a single block: its output jet entries become leaf nodes, and
//! the reverse sweep hands their adjoints back to [`mlp::backpropagate`],
//! which applies the per-layer jet rules analytically.

use std::cell::RefCell;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use ndarray::Array2;

use super::arch::NetworkParams;
use super::jet::JetBatch;
use super::mlp::{self, ForwardCache, UnitMask};
use crate::error::{usage_err, Result};

/// Scalar arithmetic shared by plain floats and tape variables.
pub trait Real:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
{
    fn tanh(self) -> Self;
    fn value(&self) -> f64;
}

impl Real for f64 {
    fn tanh(self) -> Self {
        f64::tanh(self)
    }

    fn value(&self) -> f64 {
        *self
    }
}

#[derive(Clone, Copy, Debug)]
struct Node {
    parents: [usize; 2],
    partials: [f64; 2],
    arity: u8,
}

/// Handle to a registered parameter vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SlotId(usize);

/// Handle to a registered scalar latent (e.g. an unknown PDE coefficient).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LatentId(usize);

struct Slot {
    len: usize,
    trainable: bool,
}

struct Block {
    slot: usize,
    first_leaf: usize,
    params: NetworkParams,
    cache: ForwardCache,
}

#[derive(Default)]
struct Inner {
    nodes: Vec<Node>,
    slots: Vec<Slot>,
    blocks: Vec<Block>,
    latents: Vec<usize>,
    output: Option<usize>,
}

#[derive(Default)]
pub struct Tape {
    inner: RefCell<Inner>,
}

impl fmt::Debug for Tape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let inner = self.inner.borrow();
        f.debug_struct("Tape")
            .field("nodes", &inner.nodes.len())
            .field("blocks", &inner.blocks.len())
            .field("finalized", &inner.output.is_some())
            .finish()
    }
}

/// A scalar recorded on a [`Tape`].
#[derive(Clone, Copy)]
pub struct Var<'t> {
    tape: &'t Tape,
    idx: usize,
    val: f64,
}

impl fmt::Debug for Var<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Var({}, {})", self.idx, self.val)
    }
}

impl<'t> Var<'t> {
    pub fn val(&self) -> f64 {
        self.val
    }

    pub fn square(self) -> Self {
        self.tape.push(self.val * self.val, &[(self.idx, 2.0 * self.val)])
    }
}

/// Output entries of a recorded network as tape variables.
pub struct RecordedNet<'t> {
    tape: &'t Tape,
    first_leaf: usize,
    output: JetBatch,
    pub last_hidden: JetBatch,
}

impl<'t> RecordedNet<'t> {
    pub fn output(&self) -> &JetBatch {
        &self.output
    }

    /// Entry `channel` of stack row `row` (see [`JetBatch`] for the row layout).
    pub fn entry(&self, row: usize, channel: usize) -> Var<'t> {
        let width = self.output.width();
        Var {
            tape: self.tape,
            idx: self.first_leaf + row * width + channel,
            val: self.output.data()[[row, channel]],
        }
    }

    pub fn value(&self, point: usize, channel: usize) -> Var<'t> {
        self.entry(point, channel)
    }

    pub fn d1(&self, point: usize, dir: usize, channel: usize) -> Var<'t> {
        let layout = self.output.layout();
        self.entry(layout.d1_block(dir) * layout.n_points() + point, channel)
    }

    pub fn d2(&self, point: usize, dir: usize, channel: usize) -> Option<Var<'t>> {
        let layout = self.output.layout();
        layout
            .d2_block(dir)
            .map(|b| self.entry(b * layout.n_points() + point, channel))
    }
}

/// Adjoints produced by one reverse sweep.
#[derive(Clone, Debug)]
pub struct Gradients {
    slots: Vec<Vec<f64>>,
    latents: Vec<f64>,
}

impl Gradients {
    pub fn slot(&self, id: SlotId) -> &[f64] {
        &self.slots[id.0]
    }

    pub fn latent(&self, id: LatentId) -> Result<f64> {
        self.latents
            .get(id.0)
            .copied()
            .ok_or_else(|| usage_err(format!("latent {} is not registered on this tape", id.0)))
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    fn push(&self, val: f64, parents: &[(usize, f64)]) -> Var<'_> {
        let mut node = Node {
            parents: [0; 2],
            partials: [0.0; 2],
            arity: parents.len() as u8,
        };
        for (k, &(p, d)) in parents.iter().enumerate() {
            node.parents[k] = p;
            node.partials[k] = d;
        }
        let mut inner = self.inner.borrow_mut();
        let idx = inner.nodes.len();
        inner.nodes.push(node);
        Var {
            tape: self,
            idx,
            val,
        }
    }

    /// A leaf with no registered role; its adjoint is discarded.
    pub fn constant(&self, val: f64) -> Var<'_> {
        self.push(val, &[])
    }

    pub fn register_params(&self, len: usize, trainable: bool) -> SlotId {
        let mut inner = self.inner.borrow_mut();
        inner.slots.push(Slot { len, trainable });
        SlotId(inner.slots.len() - 1)
    }

    pub fn latent(&self, val: f64) -> (LatentId, Var<'_>) {
        let var = self.push(val, &[]);
        let mut inner = self.inner.borrow_mut();
        inner.latents.push(var.idx);
        (LatentId(inner.latents.len() - 1), var)
    }

    /// Evaluate a network on `input` and record it against `slot`.
    ///
    /// For a frozen slot the outputs are still leaves, but no reverse pass
    /// reaches the parameters (stop-gradient).
    pub fn record_net(
        &self,
        slot: SlotId,
        params: &NetworkParams,
        input: &JetBatch,
        mask: Option<&UnitMask>,
    ) -> Result<RecordedNet<'_>> {
        let (slot_len, trainable) = {
            let inner = self.inner.borrow();
            let s = inner
                .slots
                .get(slot.0)
                .ok_or_else(|| usage_err("parameter slot is not registered on this tape"))?;
            (s.len, s.trainable)
        };
        if slot_len != params.total_len() {
            return Err(usage_err(format!(
                "slot holds {slot_len} parameters, network has {}",
                params.total_len()
            )));
        }
        let prop = mlp::propagate(params, input, mask, trainable)?;
        let count = prop.output.data().len();
        let mut inner = self.inner.borrow_mut();
        let first_leaf = inner.nodes.len();
        inner.nodes.extend(std::iter::repeat_n(
            Node {
                parents: [0; 2],
                partials: [0.0; 2],
                arity: 0,
            },
            count,
        ));
        if let Some(cache) = prop.cache {
            inner.blocks.push(Block {
                slot: slot.0,
                first_leaf,
                params: params.clone(),
                cache,
            });
        }
        drop(inner);
        Ok(RecordedNet {
            tape: self,
            first_leaf,
            output: prop.output,
            last_hidden: prop.last_hidden,
        })
    }

    /// Mark `loss` as the scalar the reverse sweep starts from.
    pub fn finalize(&self, loss: Var<'_>) -> Result<()> {
        if !std::ptr::eq(loss.tape, self) {
            return Err(usage_err("loss variable belongs to a different tape"));
        }
        self.inner.borrow_mut().output = Some(loss.idx);
        Ok(())
    }

    pub fn is_finalized(&self) -> bool {
        self.inner.borrow().output.is_some()
    }

    pub fn len(&self) -> usize {
        self.inner.borrow().nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Reverse sweep from the finalized scalar.
    pub fn gradients(&self) -> Result<Gradients> {
        let inner = self.inner.borrow();
        let out = inner
            .output
            .ok_or_else(|| usage_err("tape has not been finalized to a scalar loss"))?;
        let mut adj = vec![0.0; inner.nodes.len()];
        adj[out] = 1.0;
        for i in (0..=out).rev() {
            let a = adj[i];
            if a == 0.0 {
                continue;
            }
            let node = inner.nodes[i];
            for k in 0..node.arity as usize {
                adj[node.parents[k]] += a * node.partials[k];
            }
        }
        let mut slots: Vec<Vec<f64>> = inner.slots.iter().map(|s| vec![0.0; s.len]).collect();
        for block in &inner.blocks {
            let layout = block.cache.layout();
            let width = block.params.arch().output_dim;
            let count = layout.rows() * width;
            let g = Array2::from_shape_vec(
                (layout.rows(), width),
                adj[block.first_leaf..block.first_leaf + count].to_vec(),
            )
            .expect("leaf block shape");
            mlp::backpropagate(&block.params, &block.cache, g.view(), &mut slots[block.slot])?;
        }
        let latents = inner.latents.iter().map(|&i| adj[i]).collect();
        Ok(Gradients { slots, latents })
    }
}

/// Gradient of the finalized loss with respect to every trainable slot,
/// concatenated in registration order.
pub fn grad_params(tape: &Tape) -> Result<Vec<f64>> {
    let grads = tape.gradients()?;
    let inner = tape.inner.borrow();
    Ok(inner
        .slots
        .iter()
        .zip(grads.slots)
        .filter(|(s, _)| s.trainable)
        .flat_map(|(_, g)| g)
        .collect())
}

/// Derivative of the finalized loss with respect to a registered latent.
pub fn grad_latent(tape: &Tape, latent: LatentId) -> Result<f64> {
    tape.gradients()?.latent(latent)
}

impl<'t> Add for Var<'t> {
    type Output = Var<'t>;
    fn add(self, rhs: Var<'t>) -> Var<'t> {
        self.tape
            .push(self.val + rhs.val, &[(self.idx, 1.0), (rhs.idx, 1.0)])
    }
}

impl<'t> Sub for Var<'t> {
    type Output = Var<'t>;
    fn sub(self, rhs: Var<'t>) -> Var<'t> {
        self.tape
            .push(self.val - rhs.val, &[(self.idx, 1.0), (rhs.idx, -1.0)])
    }
}

impl<'t> Mul for Var<'t> {
    type Output = Var<'t>;
    fn mul(self, rhs: Var<'t>) -> Var<'t> {
        self.tape
            .push(self.val * rhs.val, &[(self.idx, rhs.val), (rhs.idx, self.val)])
    }
}

impl<'t> Neg for Var<'t> {
    type Output = Var<'t>;
    fn neg(self) -> Var<'t> {
        self.tape.push(-self.val, &[(self.idx, -1.0)])
    }
}

impl<'t> Add<f64> for Var<'t> {
    type Output = Var<'t>;
    fn add(self, rhs: f64) -> Var<'t> {
        self.tape.push(self.val + rhs, &[(self.idx, 1.0)])
    }
}

impl<'t> Sub<f64> for Var<'t> {
    type Output = Var<'t>;
    fn sub(self, rhs: f64) -> Var<'t> {
        self.tape.push(self.val - rhs, &[(self.idx, 1.0)])
    }
}

impl<'t> Mul<f64> for Var<'t> {
    type Output = Var<'t>;
    fn mul(self, rhs: f64) -> Var<'t> {
        self.tape.push(self.val * rhs, &[(self.idx, rhs)])
    }
}

impl<'t> Real for Var<'t> {
    fn tanh(self) -> Self {
        let t = self.val.tanh();
        self.tape.push(t, &[(self.idx, 1.0 - t * t)])
    }

    fn value(&self) -> f64 {
        self.val
    }
}

/// Sum of a non-empty slice of variables.
pub fn sum<'t>(vars: &[Var<'t>]) -> Option<Var<'t>> {
    let (first, rest) = vars.split_first()?;
    Some(rest.iter().fold(*first, |acc, &v| acc + v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::arch::Architecture;
    use ndarray::array;

    fn linear(w: f64) -> NetworkParams {
        let arch = Architecture::new(1, vec![], 1).unwrap();
        NetworkParams::from_flat(&arch, vec![w, 0.0]).unwrap()
    }

    fn squared_residual_grad(w: f64, x: f64) -> f64 {
        let tape = Tape::new();
        let params = linear(w);
        let slot = tape.register_params(params.total_len(), true);
        let input = JetBatch::from_points(array![[x]].view(), &[]).unwrap();
        let net = tape.record_net(slot, &params, &input, None).unwrap();
        let r = net.value(0, 0) - 1.0;
        tape.finalize(r.square()).unwrap();
        grad_params(&tape).unwrap()[0]
    }

    #[test]
    fn zero_residual_has_zero_gradient() {
        assert_eq!(squared_residual_grad(0.5, 2.0), 0.0);
    }

    #[test]
    fn chain_rule_through_network() {
        // 2 (w x - 1) x at w = 1, x = 2
        assert_eq!(squared_residual_grad(1.0, 2.0), 4.0);
    }

    #[test]
    fn gradient_through_first_derivative() {
        let tape = Tape::new();
        let params = linear(3.0);
        let slot = tape.register_params(params.total_len(), true);
        let input =
            JetBatch::from_points(array![[0.7]].view(), &[crate::autodiff::Direction::second(0)])
                .unwrap();
        let net = tape.record_net(slot, &params, &input, None).unwrap();
        tape.finalize(net.d1(0, 0, 0).square()).unwrap();
        let g = grad_params(&tape).unwrap();
        assert_eq!(g, vec![6.0, 0.0]);
    }

    #[test]
    fn unfinalized_tape_is_usage_error() {
        let tape = Tape::new();
        let _ = tape.constant(1.0);
        assert!(matches!(grad_params(&tape), Err(crate::PinnError::Usage(_))));
    }

    #[test]
    fn latent_derivatives() {
        let tape = Tape::new();
        let (id, kappa) = tape.latent(0.1);
        tape.finalize(kappa * kappa).unwrap();
        assert!((grad_latent(&tape, id).unwrap() - 0.2).abs() < 1e-15);

        let tape = Tape::new();
        let (id, _) = tape.latent(0.1);
        let c = tape.constant(3.0);
        tape.finalize(c * c).unwrap();
        assert_eq!(grad_latent(&tape, id).unwrap(), 0.0);

        // (u_t - kappa u_xx)^2 with u_t = 1, u_xx = 2
        let tape = Tape::new();
        let (id, kappa) = tape.latent(0.1);
        let u_t = tape.constant(1.0);
        let u_xx = tape.constant(2.0);
        tape.finalize((u_t - kappa * u_xx).square()).unwrap();
        assert!((grad_latent(&tape, id).unwrap() - -3.2).abs() < 1e-12);
    }

    #[test]
    fn unregistered_latent_is_usage_error() {
        let other = Tape::new();
        let _ = other.latent(1.0);
        let (second, _) = other.latent(2.0);
        let tape = Tape::new();
        let (_, k) = tape.latent(1.0);
        tape.finalize(k).unwrap();
        assert!(matches!(grad_latent(&tape, second), Err(crate::PinnError::Usage(_))));
    }

    #[test]
    fn frozen_slot_gets_no_gradient() {
        let tape = Tape::new();
        let params = linear(2.0);
        let frozen = tape.register_params(params.total_len(), false);
        let input = JetBatch::from_points(array![[1.0]].view(), &[]).unwrap();
        let net = tape.record_net(frozen, &params, &input, None).unwrap();
        tape.finalize(net.value(0, 0).square()).unwrap();
        assert_eq!(tape.gradients().unwrap().slot(frozen), &[0.0, 0.0]);
        assert!(grad_params(&tape).unwrap().is_empty());
    }
}
