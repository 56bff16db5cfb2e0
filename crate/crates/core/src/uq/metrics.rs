use serde::{Deserialize, Serialize};

use super::PredictiveEnsemble;
use crate::error::{config_err, Result};

/// `Phi^{-1}(0.975)`.
pub const Z_975: f64 = 1.959_963_984_540_054;

/// Inverse standard normal CDF (Acklam's rational approximation, relative
/// error below 1.2e-9 on (0, 1)).
pub fn normal_quantile(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.02425;
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    let tail = |q: f64| {
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    if p < P_LOW {
        tail((-2.0 * p.ln()).sqrt())
    } else if p > 1.0 - P_LOW {
        -tail((-2.0 * (1.0 - p).ln()).sqrt())
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    }
}

/// Mean width of the `+-2 sigma` band: `(4 / N) sum sigma_i`.
pub fn sharpness(ens: &PredictiveEnsemble) -> f64 {
    let n = ens.n_points();
    if n == 0 {
        return 0.0;
    }
    4.0 * ens.variance().iter().map(|v| v.sqrt()).sum::<f64>() / n as f64
}

fn check_aligned(ens: &PredictiveEnsemble, exact: &[f64]) -> Result<()> {
    if exact.len() != ens.n_points() {
        return Err(config_err(format!(
            "{} exact values for {} ensemble points",
            exact.len(),
            ens.n_points()
        )));
    }
    Ok(())
}

/// Fraction of points with `|u - mu| <= Phi^{-1}((1 + gamma) / 2) sigma`.
/// A point with zero variance counts as covered only when `mu == u`.
pub fn coverage(ens: &PredictiveEnsemble, exact: &[f64], gamma: f64) -> Result<f64> {
    check_aligned(ens, exact)?;
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(config_err(format!("coverage level must lie in (0, 1), got {gamma}")));
    }
    if exact.is_empty() {
        return Ok(0.0);
    }
    let z = if gamma == 0.95 { Z_975 } else { normal_quantile(0.5 * (1.0 + gamma)) };
    let inside = ens
        .mean()
        .iter()
        .zip(ens.variance())
        .zip(exact)
        .filter(|((mu, var), u)| (*u - *mu).abs() <= z * var.sqrt())
        .count();
    Ok(inside as f64 / exact.len() as f64)
}

/// Root-mean-square error of the predictive mean.
pub fn rmse(ens: &PredictiveEnsemble, exact: &[f64]) -> Result<f64> {
    check_aligned(ens, exact)?;
    if exact.is_empty() {
        return Ok(0.0);
    }
    let se: f64 = ens.mean().iter().zip(exact).map(|(m, u)| (m - u) * (m - u)).sum();
    Ok((se / exact.len() as f64).sqrt())
}

/// One table row of evaluation results.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub rho: f64,
    pub method: String,
    pub sharpness: f64,
    pub coverage: f64,
    pub rmse: f64,
    pub time_s: f64,
    /// Epinet-only training time; E-PINN rows only.
    pub time_epinet_s: Option<f64>,
    pub seed: u64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    fn ens(mean: &[f64], sigma: &[f64]) -> PredictiveEnsemble {
        // two members at mean -+ sigma give exactly this mean and std
        let n = mean.len();
        let mut s = Array2::zeros((2, n));
        for i in 0..n {
            s[[0, i]] = mean[i] - sigma[i];
            s[[1, i]] = mean[i] + sigma[i];
        }
        PredictiveEnsemble::new(s).unwrap()
    }

    #[test]
    fn quantile_at_975() {
        assert!((normal_quantile(0.975) - Z_975).abs() < 1e-8);
        assert!((normal_quantile(0.5)).abs() < 1e-15);
        assert!((normal_quantile(0.01) + 2.326_347_874_040_841).abs() < 1e-8);
    }

    #[test]
    fn sharpness_of_quarter_sigma() {
        assert_eq!(sharpness(&ens(&[0.0; 4], &[0.25; 4])), 1.0);
        assert_eq!(sharpness(&ens(&[1.0; 3], &[0.0; 3])), 0.0);
    }

    #[test]
    fn coverage_cases() {
        let u = [0.5, -0.2, 1.0];
        assert_eq!(coverage(&ens(&u, &[0.1; 3]), &u, 0.95).unwrap(), 1.0);
        let off: Vec<f64> = u.iter().map(|x| x + 0.3).collect();
        assert_eq!(coverage(&ens(&off, &[0.1; 3]), &u, 0.95).unwrap(), 0.0);
        assert_eq!(coverage(&ens(&u, &[0.0; 3]), &u, 0.95).unwrap(), 1.0);
    }

    #[test]
    fn rmse_cases() {
        let u = [0.5, -0.2, 1.0];
        assert_eq!(rmse(&ens(&u, &[0.3; 3]), &u).unwrap(), 0.0);
        let off: Vec<f64> = u.iter().map(|x| x + 0.1).collect();
        assert!((rmse(&ens(&off, &[0.0; 3]), &u).unwrap() - 0.1).abs() < 1e-15);
        assert!(rmse(&ens(&u, &[0.0; 3]), &u[..2]).is_err());
    }
}
