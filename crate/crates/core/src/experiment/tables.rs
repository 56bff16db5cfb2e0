//! Column layouts of every CSV the runner emits, and checked reading.

use std::path::Path;

use crate::error::{PinnError, Result};

pub const METRICS: &[&str] = &["rho", "method", "sharpness", "coverage", "rmse", "time_s", "time_epinet_s"];
pub const PREDICTIONS_1D: &[&str] = &["x", "u_exact", "mu", "sigma"];
pub const PREDICTIONS_2D: &[&str] = &["x", "y", "u_exact", "mu", "sigma"];
pub const PREDICTIONS_SPACE_TIME: &[&str] = &["x", "t", "u_exact", "mu", "sigma"];
pub const BAND: &[&str] = &["x", "u_exact", "mu", "mu_minus_2sigma", "mu_plus_2sigma"];
pub const KAPPA: &[&str] = &["rho", "method", "kappa_mean", "kappa_std", "time_s"];
pub const KAPPA_HISTOGRAM: &[&str] = &["bin_left", "bin_right", "count"];
pub const TRAIN_LOG: &[&str] = &["epoch", "L_total", "L_data", "L_pde", "L_bc", "L_kappa", "wall_seconds"];
pub const SWEEP: &[&str] = &[
    "axis", "value", "rho", "method", "sharpness", "coverage", "rmse", "time_s", "time_epinet_s", "status",
];

/// Every layout by name, as recorded in the checked-in manifest.
pub const ALL: &[(&str, &[&str])] = &[
    ("metrics", METRICS),
    ("predictions_1d", PREDICTIONS_1D),
    ("predictions_2d", PREDICTIONS_2D),
    ("predictions_space_time", PREDICTIONS_SPACE_TIME),
    ("band", BAND),
    ("kappa", KAPPA),
    ("kappa_histogram", KAPPA_HISTOGRAM),
    ("train_log", TRAIN_LOG),
    ("sweep", SWEEP),
];

pub fn write_table(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Read a table whose header must equal `header` exactly.
pub fn read_table(path: &Path, header: &[&str]) -> Result<Vec<csv::StringRecord>> {
    let schema = |reason: String| PinnError::Schema {
        path: path.display().to_string(),
        reason,
    };
    let mut r = csv::Reader::from_path(path).map_err(|e| schema(e.to_string()))?;
    let found: Vec<String> = r
        .headers()
        .map_err(|e| schema(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    if found != header {
        return Err(schema(format!("columns {found:?}, expected {header:?}")));
    }
    r.records()
        .map(|rec| rec.map_err(|e| schema(e.to_string())))
        .collect()
}

/// Parse a float cell; an empty cell is `None`.
pub fn parse_cell(path: &Path, rec: &csv::StringRecord, i: usize) -> Result<Option<f64>> {
    let cell = rec.get(i).unwrap_or("");
    if cell.is_empty() {
        return Ok(None);
    }
    cell.parse().map(Some).map_err(|_| PinnError::Schema {
        path: path.display().to_string(),
        reason: format!("cell {cell:?} in column {i} is not a number"),
    })
}

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}
