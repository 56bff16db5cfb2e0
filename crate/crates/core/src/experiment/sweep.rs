use std::path::Path;

use super::config::{ExperimentConfig, Scale};
use super::run::{run, RunRecord, RunStatus};
use super::tables::{self, fmt_opt, write_table};
use crate::error::{config_err, Result};

/// The one quantity an ablation varies.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepAxis {
    NColloc,
    /// Hidden width `H` of a two-layer learnable epinet.
    EpinetWidth,
    EpinetEpochs,
    BaseEpochs,
    Rho,
}

impl SweepAxis {
    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "n_colloc" => SweepAxis::NColloc,
            "epinet_width" => SweepAxis::EpinetWidth,
            "epinet_epochs" => SweepAxis::EpinetEpochs,
            "base_epochs" => SweepAxis::BaseEpochs,
            "rho" => SweepAxis::Rho,
            other => {
                return Err(config_err(format!(
                    "unknown sweep axis {other:?} (n_colloc, epinet_width, epinet_epochs, base_epochs, rho)"
                )))
            }
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::NColloc => "n_colloc",
            SweepAxis::EpinetWidth => "epinet_width",
            SweepAxis::EpinetEpochs => "epinet_epochs",
            SweepAxis::BaseEpochs => "base_epochs",
            SweepAxis::Rho => "rho",
        }
    }

    /// Ablation grid; epoch grids shrink at desk scale.
    pub fn default_values(self, scale: Scale) -> Vec<f64> {
        match (self, scale) {
            (SweepAxis::NColloc, _) => vec![20.0, 100.0, 500.0, 1000.0],
            (SweepAxis::EpinetWidth, _) => vec![4.0, 8.0, 16.0, 32.0, 64.0],
            (SweepAxis::Rho, _) => vec![0.0, 0.1, 0.3],
            (SweepAxis::EpinetEpochs, Scale::Paper) | (SweepAxis::BaseEpochs, Scale::Paper) => {
                vec![1e4, 1e5, 1e6]
            }
            (SweepAxis::EpinetEpochs, Scale::Desk) => vec![1e3, 5e3, 2e4],
            (SweepAxis::BaseEpochs, Scale::Desk) => vec![3e3, 1e4, 3e4],
        }
    }

    /// `base` with this axis set to `value`, writing under `out/<axis>-<value>`.
    pub fn apply(self, base: &ExperimentConfig, value: f64, out: &Path) -> Result<ExperimentConfig> {
        let count = || {
            if value >= 0.0 && value.fract() == 0.0 && value.is_finite() {
                Ok(value as usize)
            } else {
                Err(config_err(format!("{} needs a non-negative integer, got {value}", self.name())))
            }
        };
        let mut cfg = base.clone();
        match self {
            SweepAxis::NColloc => cfg.points.collocation = count()?,
            SweepAxis::EpinetWidth => cfg.epinet.hidden = vec![count()?; 2],
            SweepAxis::EpinetEpochs => cfg.epinet_epochs = count()?,
            SweepAxis::BaseEpochs => cfg.base_epochs = count()?,
            SweepAxis::Rho => cfg.rho = value,
        }
        cfg.out_dir = out.join(format!("{}-{value}", self.name()));
        cfg.validate()?;
        Ok(cfg)
    }
}

/// One sweep entry: the record, or the reason the run could not start.
#[derive(Clone, Debug)]
pub struct SweepEntry {
    pub value: f64,
    pub outcome: std::result::Result<RunRecord, String>,
}

/// Run `base` once per value. Individual failures are recorded and the sweep
/// moves on. Writes `sweep.csv` in `out`.
pub fn sweep(base: &ExperimentConfig, axis: SweepAxis, values: &[f64], out: &Path) -> Result<Vec<SweepEntry>> {
    std::fs::create_dir_all(out)?;
    let mut entries = Vec::with_capacity(values.len());
    for &value in values {
        let outcome = axis
            .apply(base, value, out)
            .and_then(|cfg| run(&cfg))
            .map_err(|e| e.to_string());
        entries.push(SweepEntry { value, outcome });
    }
    let rows: Vec<Vec<String>> = entries
        .iter()
        .map(|e| {
            let mut row = vec![axis.name().to_string(), e.value.to_string()];
            match &e.outcome {
                Ok(rec) => {
                    let m = rec.metrics.as_ref();
                    row.push(rec.config.rho.to_string());
                    row.push(rec.config.method_label());
                    row.push(fmt_opt(m.map(|m| m.sharpness)));
                    row.push(fmt_opt(m.map(|m| m.coverage)));
                    row.push(fmt_opt(m.map(|m| m.rmse)));
                    row.push(fmt_opt(m.map(|m| m.time_s)));
                    row.push(fmt_opt(m.and_then(|m| m.time_epinet_s)));
                    row.push(
                        match rec.status {
                            RunStatus::Completed => "completed",
                            RunStatus::Failed => "failed",
                        }
                        .to_string(),
                    );
                }
                Err(_) => {
                    row.extend(std::iter::repeat_n(String::new(), 7));
                    row.push("invalid".to_string());
                }
            }
            row
        })
        .collect();
    write_table(&out.join("sweep.csv"), tables::SWEEP, &rows)?;
    Ok(entries)
}
