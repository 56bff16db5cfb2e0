use ndarray::Array2;

use crate::autodiff::{JetLayout, RecordedNet, Var};
use crate::pde::Jets;

/// A network field on the tape: recorded nets summed, plus a constant offset
/// (the contribution of frozen nets).
pub struct TapeField<'t> {
    parts: Vec<RecordedNet<'t>>,
    offset: Option<Array2<f64>>,
    layout: JetLayout,
}

impl<'t> TapeField<'t> {
    pub fn new(net: RecordedNet<'t>) -> Self {
        let layout = net.output().layout().clone();
        TapeField {
            parts: vec![net],
            offset: None,
            layout,
        }
    }

    /// `offset` uses the same row layout as the recorded output.
    pub fn with_offset(net: RecordedNet<'t>, offset: Array2<f64>) -> Self {
        assert_eq!(offset.dim(), net.output().data().dim(), "offset shape");
        let mut f = Self::new(net);
        f.offset = Some(offset);
        f
    }

    pub fn add_part(&mut self, net: RecordedNet<'t>) {
        assert_eq!(net.output().layout(), &self.layout, "part layout");
        self.parts.push(net);
    }

    pub fn n_points(&self) -> usize {
        self.layout.n_points()
    }

    pub fn layout(&self) -> &JetLayout {
        &self.layout
    }

    fn entry(&self, row: usize, channel: usize) -> Var<'t> {
        let mut v = self.parts[0].entry(row, channel);
        for p in &self.parts[1..] {
            v = v + p.entry(row, channel);
        }
        match &self.offset {
            Some(off) => v + off[[row, channel]],
            None => v,
        }
    }

    pub fn value(&self, point: usize, channel: usize) -> Var<'t> {
        self.entry(point, channel)
    }

    /// Per-axis jets of `channel` at `point`.
    pub fn jets(&self, point: usize, channel: usize) -> Jets<Var<'t>> {
        let n = self.layout.n_points();
        let mut jets = Jets::new(self.value(point, channel));
        for (k, dir) in self.layout.dirs().iter().enumerate() {
            jets.d1[dir.axis] = Some(self.entry(self.layout.d1_block(k) * n + point, channel));
            jets.d2[dir.axis] = self
                .layout
                .d2_block(k)
                .map(|b| self.entry(b * n + point, channel));
        }
        jets
    }
}
