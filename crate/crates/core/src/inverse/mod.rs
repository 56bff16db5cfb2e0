//! Diffusivity estimation for the inverse heat problem.

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use crate::bayes::latent_draws;
use crate::error::{usage_err, Result};
use crate::uq::{mc_predict, Predictor};

/// Bin count of the reported `kappa` histogram.
pub const HISTOGRAM_BINS: usize = 50;

/// Output channel of the co-trained diffusivity field.
pub const KAPPA_CHANNEL: usize = 1;

/// Mean and sample standard deviation of the `kappa` draws of one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KappaSummary {
    pub method: String,
    pub rho: f64,
    pub mean: f64,
    /// Divides by `M - 1`.
    pub std: f64,
    pub samples: Vec<f64>,
}

/// One histogram bin, `[left, right)` except the last which is closed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub bin_left: f64,
    pub bin_right: f64,
    pub count: usize,
}

/// One `kappa` value per ensemble member.
///
/// E-PINN and dropout average the `kappa` output over `collocation` for each
/// `z` or mask; B-PINN reads the latent of every stored sample.
pub fn kappa_draws(
    predictor: &Predictor<'_>,
    collocation: ArrayView2<'_, f64>,
    members: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    match predictor {
        Predictor::Bpinn { chain, arch } => {
            if chain.is_empty() {
                return Err(usage_err("no posterior samples to draw kappa from"));
            }
            latent_draws(chain, arch)
        }
        Predictor::Epinn { base, .. } => field_draws(base.arch().output_dim, predictor, collocation, members, seed),
        Predictor::Dropout(model) => {
            field_draws(model.params.arch().output_dim, predictor, collocation, members, seed)
        }
    }
}

fn field_draws(
    output_dim: usize,
    predictor: &Predictor<'_>,
    collocation: ArrayView2<'_, f64>,
    members: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    if output_dim <= KAPPA_CHANNEL {
        return Err(usage_err("model has no kappa output channel"));
    }
    if collocation.nrows() == 0 {
        return Err(usage_err("kappa averaging needs collocation points"));
    }
    Ok(mc_predict(predictor, collocation, members, KAPPA_CHANNEL, seed)?.member_means())
}

/// Sample mean and `1/(M-1)` standard deviation of at least two draws.
pub fn kappa_summarize(draws: &[f64], method: &str, rho: f64) -> Result<KappaSummary> {
    if draws.len() < 2 {
        return Err(usage_err(format!("kappa summary needs at least 2 draws, got {}", draws.len())));
    }
    let m = draws.len() as f64;
    let mean = draws.iter().sum::<f64>() / m;
    let ss: f64 = draws.iter().map(|k| (k - mean) * (k - mean)).sum();
    Ok(KappaSummary {
        method: method.to_string(),
        rho,
        mean,
        std: (ss / (m - 1.0)).sqrt(),
        samples: draws.to_vec(),
    })
}

/// Equal-width bins spanning `[min, max]` of the draws. When every draw is
/// equal all bins are degenerate and the first holds every draw.
pub fn histogram(draws: &[f64], bins: usize) -> Result<Vec<HistogramBin>> {
    if draws.is_empty() || bins == 0 {
        return Err(usage_err("histogram needs draws and at least one bin"));
    }
    if draws.iter().any(|k| !k.is_finite()) {
        return Err(usage_err("histogram draws must be finite"));
    }
    let lo = draws.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = draws.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &k in draws {
        let i = if width > 0.0 { (((k - lo) / width) as usize).min(bins - 1) } else { 0 };
        counts[i] += 1;
    }
    Ok(counts
        .into_iter()
        .enumerate()
        .map(|(i, count)| HistogramBin {
            bin_left: lo + width * i as f64,
            bin_right: if i + 1 == bins { hi } else { lo + width * (i + 1) as f64 },
            count,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_examples() {
        let s = kappa_summarize(&[0.1, 0.1], "E-PINN", 0.1).unwrap();
        assert_eq!((s.mean, s.std), (0.1, 0.0));
        let s = kappa_summarize(&[0.0, 0.2], "E-PINN", 0.1).unwrap();
        assert!((s.mean - 0.1).abs() < 1e-15);
        assert!((s.std - 0.02f64.sqrt()).abs() < 1e-15);
        assert!(kappa_summarize(&[0.1], "E-PINN", 0.1).is_err());
    }

    #[test]
    fn histogram_counts_every_draw() {
        let draws: Vec<f64> = (0..101).map(|i| i as f64 / 100.0).collect();
        let h = histogram(&draws, HISTOGRAM_BINS).unwrap();
        assert_eq!(h.len(), 50);
        assert_eq!(h.iter().map(|b| b.count).sum::<usize>(), 101);
        assert_eq!(h[0].bin_left, 0.0);
        assert_eq!(h[49].bin_right, 1.0);
        assert_eq!(histogram(&[0.3, 0.3], 50).unwrap()[0].count, 2);
    }
}
