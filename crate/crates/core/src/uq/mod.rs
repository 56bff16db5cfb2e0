//! Monte Carlo predictive statistics and calibration metrics.

mod ensemble;
mod metrics;
mod predict;

pub use ensemble::PredictiveEnsemble;
pub use metrics::{coverage, normal_quantile, rmse, sharpness, MetricsReport, Z_975};
pub use predict::{mc_predict, Predictor};
