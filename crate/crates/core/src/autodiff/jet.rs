//! Batched second-order directional jets.
//!
//! A [`JetBatch`] stacks, for `n` points, the value rows followed by one block
//! of first-derivative rows per direction and, for directions that need it, a
//! block of second-derivative rows. Every block has the same `n x width` shape,
//! so an affine layer maps the whole stack with a single matrix product.

use ndarray::{s, Array2, ArrayView2, ArrayViewMut2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{config_err, Result};

/// A coordinate axis along which derivatives are propagated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Direction {
    pub axis: usize,
    /// Also carry the second directional derivative.
    pub second: bool,
}

impl Direction {
    pub const fn first(axis: usize) -> Self {
        Direction {
            axis,
            second: false,
        }
    }

    pub const fn second(axis: usize) -> Self {
        Direction { axis, second: true }
    }
}

/// Value and directional derivatives of one output channel at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JetLayout {
    n_points: usize,
    dirs: Vec<Direction>,
    d1_block: Vec<usize>,
    d2_block: Vec<Option<usize>>,
    n_blocks: usize,
}

impl JetLayout {
    pub fn new(n_points: usize, dirs: &[Direction]) -> Self {
        let mut next = 1;
        let mut d1_block = Vec::with_capacity(dirs.len());
        let mut d2_block = Vec::with_capacity(dirs.len());
        for d in dirs {
            d1_block.push(next);
            next += 1;
            if d.second {
                d2_block.push(Some(next));
                next += 1;
            } else {
                d2_block.push(None);
            }
        }
        JetLayout {
            n_points,
            dirs: dirs.to_vec(),
            d1_block,
            d2_block,
            n_blocks: next,
        }
    }

    pub fn value_only(n_points: usize) -> Self {
        Self::new(n_points, &[])
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn dirs(&self) -> &[Direction] {
        &self.dirs
    }

    pub fn n_blocks(&self) -> usize {
        self.n_blocks
    }

    pub fn rows(&self) -> usize {
        self.n_blocks * self.n_points
    }

    pub fn d1_block(&self, dir: usize) -> usize {
        self.d1_block[dir]
    }

    pub fn d2_block(&self, dir: usize) -> Option<usize> {
        self.d2_block[dir]
    }

    pub fn block_rows(&self, block: usize) -> std::ops::Range<usize> {
        block * self.n_points..(block + 1) * self.n_points
    }

    /// Index of the direction that differentiates along `axis`.
    pub fn dir_for_axis(&self, axis: usize) -> Option<usize> {
        self.dirs.iter().position(|d| d.axis == axis)
    }
}

/// Stacked jet rows for a batch of points.
#[derive(Clone, Debug, PartialEq)]
pub struct JetBatch {
    layout: JetLayout,
    data: Array2<f64>,
}

impl JetBatch {
    pub fn from_parts(layout: JetLayout, data: Array2<f64>) -> Result<Self> {
        if data.nrows() != layout.rows() {
            return Err(config_err(format!(
                "jet stack has {} rows, layout needs {}",
                data.nrows(),
                layout.rows()
            )));
        }
        Ok(JetBatch { layout, data })
    }

    /// Seed jets for raw inputs: unit first derivative along each direction's axis.
    pub fn from_points(points: ArrayView2<'_, f64>, dirs: &[Direction]) -> Result<Self> {
        let (n, dim) = points.dim();
        if let Some(bad) = dirs.iter().find(|d| d.axis >= dim) {
            return Err(config_err(format!(
                "direction axis {} outside input dimension {dim}",
                bad.axis
            )));
        }
        let layout = JetLayout::new(n, dirs);
        let mut data = Array2::zeros((layout.rows(), dim));
        data.slice_mut(s![0..n, ..]).assign(&points);
        for (k, d) in dirs.iter().enumerate() {
            let rows = layout.block_rows(layout.d1_block(k));
            data.slice_mut(s![rows, d.axis]).fill(1.0);
        }
        Ok(JetBatch { layout, data })
    }

    /// Values with vanishing derivatives in every direction of `layout`.
    pub fn constant(values: ArrayView2<'_, f64>, layout: &JetLayout) -> Result<Self> {
        if values.nrows() != layout.n_points() {
            return Err(config_err("constant block row count mismatch"));
        }
        let mut data = Array2::zeros((layout.rows(), values.ncols()));
        data.slice_mut(s![0..layout.n_points(), ..]).assign(&values);
        Ok(JetBatch {
            layout: layout.clone(),
            data,
        })
    }

    /// Column-wise concatenation of batches sharing one layout.
    pub fn hcat(parts: &[&JetBatch]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| config_err("cannot concatenate zero jet batches"))?;
        if parts.iter().any(|p| p.layout != first.layout) {
            return Err(config_err("jet batches with different layouts"));
        }
        let views: Vec<_> = parts.iter().map(|p| p.data.view()).collect();
        let data = ndarray::concatenate(Axis(1), &views)
            .map_err(|e| config_err(format!("jet concatenation failed: {e}")))?
            .as_standard_layout()
            .into_owned();
        Ok(JetBatch {
            layout: first.layout.clone(),
            data,
        })
    }

    pub fn layout(&self) -> &JetLayout {
        &self.layout
    }

    pub fn width(&self) -> usize {
        self.data.ncols()
    }

    pub fn data(&self) -> &Array2<f64> {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut Array2<f64> {
        &mut self.data
    }

    pub fn into_data(self) -> Array2<f64> {
        self.data
    }

    pub fn block(&self, block: usize) -> ArrayView2<'_, f64> {
        self.data.slice(s![self.layout.block_rows(block), ..])
    }

    pub fn block_mut(&mut self, block: usize) -> ArrayViewMut2<'_, f64> {
        let rows = self.layout.block_rows(block);
        self.data.slice_mut(s![rows, ..])
    }

    pub fn values(&self) -> ArrayView2<'_, f64> {
        self.block(0)
    }

    pub fn d1(&self, dir: usize) -> ArrayView2<'_, f64> {
        self.block(self.layout.d1_block(dir))
    }

    pub fn d2(&self, dir: usize) -> Option<ArrayView2<'_, f64>> {
        self.layout.d2_block(dir).map(|b| self.block(b))
    }

    /// Jet of `channel` at `point` along direction `dir`; `d2` is zero when not carried.
    pub fn jet(&self, point: usize, channel: usize, dir: usize) -> Jet {
        let n = self.layout.n_points();
        let value = self.data[[point, channel]];
        let d1 = self.data[[self.layout.d1_block(dir) * n + point, channel]];
        let d2 = self
            .layout
            .d2_block(dir)
            .map_or(0.0, |b| self.data[[b * n + point, channel]]);
        Jet { value, d1, d2 }
    }
}
