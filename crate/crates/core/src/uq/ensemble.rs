use ndarray::{Array2, ArrayView2};

use crate::error::{usage_err, Result};

/// `M` sampled predictions at each of `N` points, reduced to mean and
/// population variance (divide by `M`).
#[derive(Clone, Debug, PartialEq)]
pub struct PredictiveEnsemble {
    samples: Array2<f64>,
    mean: Vec<f64>,
    variance: Vec<f64>,
}

impl PredictiveEnsemble {
    /// `samples` has one row per ensemble member.
    pub fn new(samples: Array2<f64>) -> Result<Self> {
        let m = samples.nrows();
        if m == 0 {
            return Err(usage_err("an ensemble needs at least one member"));
        }
        let n = samples.ncols();
        // Two-pass over offsets from the first member, so identical members
        // give exactly their value and zero variance.
        let first = samples.row(0).to_owned();
        let mut shift = vec![0.0; n];
        for row in samples.rows() {
            for ((acc, v), f) in shift.iter_mut().zip(row).zip(&first) {
                *acc += v - f;
            }
        }
        shift.iter_mut().for_each(|v| *v /= m as f64);
        let mut variance = vec![0.0; n];
        for row in samples.rows() {
            for (((acc, v), f), s) in variance.iter_mut().zip(row).zip(&first).zip(&shift) {
                let d = (v - f) - s;
                *acc += d * d;
            }
        }
        variance.iter_mut().for_each(|v| *v /= m as f64);
        let mean = first.iter().zip(&shift).map(|(f, s)| f + s).collect();
        Ok(PredictiveEnsemble {
            samples,
            mean,
            variance,
        })
    }

    pub fn n_members(&self) -> usize {
        self.samples.nrows()
    }

    pub fn n_points(&self) -> usize {
        self.samples.ncols()
    }

    pub fn samples(&self) -> ArrayView2<'_, f64> {
        self.samples.view()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn variance(&self) -> &[f64] {
        &self.variance
    }

    pub fn std(&self) -> Vec<f64> {
        self.variance.iter().map(|v| v.sqrt()).collect()
    }

    /// Mean over points of each member, e.g. a field average per draw.
    /// Offsets from the first point keep a constant row exact.
    pub fn member_means(&self) -> Vec<f64> {
        let n = self.n_points() as f64;
        self.samples
            .rows()
            .into_iter()
            .map(|r| match r.first() {
                Some(&f) => f + r.iter().map(|v| v - f).sum::<f64>() / n,
                None => f64::NAN,
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn two_member_statistics() {
        let e = PredictiveEnsemble::new(array![[0.0, 1.0], [2.0, 1.0]]).unwrap();
        assert_eq!(e.mean(), &[1.0, 1.0]);
        assert_eq!(e.variance(), &[1.0, 0.0]);
    }

    #[test]
    fn empty_is_rejected() {
        assert!(PredictiveEnsemble::new(Array2::zeros((0, 3))).is_err());
    }
}
