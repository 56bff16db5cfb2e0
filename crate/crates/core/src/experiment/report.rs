use std::collections::HashSet;
use std::path::{Path, PathBuf};

use super::tables::{self, parse_cell, read_table, write_table};
use crate::error::{usage_err, PinnError, Result};

/// One merged metrics row.
#[derive(Clone, Debug, PartialEq)]
pub struct ReportRow {
    pub run_dir: PathBuf,
    pub cells: Vec<String>,
    pub rho: f64,
    pub method: String,
}

/// Merge `metrics.csv` of every run into `out/report.csv`, sorted by
/// `(rho, method)`, and write a `+-2 sigma` band file per run under
/// `out/bands`. Returns the merged rows.
pub fn report(run_dirs: &[PathBuf], out: &Path) -> Result<Vec<ReportRow>> {
    if run_dirs.is_empty() {
        return Err(usage_err("report needs at least one run directory"));
    }
    let mut rows = Vec::new();
    let mut kappa_rows = Vec::new();
    for dir in run_dirs {
        let path = dir.join("metrics.csv");
        for rec in read_table(&path, tables::METRICS)? {
            let rho = parse_cell(&path, &rec, 0)?.ok_or_else(|| PinnError::Schema {
                path: path.display().to_string(),
                reason: "empty rho cell".into(),
            })?;
            rows.push(ReportRow {
                run_dir: dir.clone(),
                cells: rec.iter().map(str::to_string).collect(),
                rho,
                method: rec.get(1).unwrap_or("").to_string(),
            });
        }
        let kappa = dir.join("kappa.csv");
        if kappa.exists() {
            for rec in read_table(&kappa, tables::KAPPA)? {
                let rho = parse_cell(&kappa, &rec, 0)?.unwrap_or(f64::NAN);
                kappa_rows.push((rho, rec.get(1).unwrap_or("").to_string(), rec));
            }
        }
    }
    rows.sort_by(|a, b| a.rho.total_cmp(&b.rho).then_with(|| a.method.cmp(&b.method)));
    kappa_rows.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));

    std::fs::create_dir_all(out)?;
    let cells: Vec<Vec<String>> = rows.iter().map(|r| r.cells.clone()).collect();
    write_table(&out.join("report.csv"), tables::METRICS, &cells)?;
    if !kappa_rows.is_empty() {
        let cells: Vec<Vec<String>> = kappa_rows
            .iter()
            .map(|(_, _, rec)| rec.iter().map(str::to_string).collect())
            .collect();
        write_table(&out.join("kappa_report.csv"), tables::KAPPA, &cells)?;
    }

    let bands = out.join("bands");
    std::fs::create_dir_all(&bands)?;
    let mut used = HashSet::new();
    for dir in run_dirs {
        let pred = dir.join("predictions.csv");
        if !pred.exists() {
            continue;
        }
        let stem = dir
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "run".into());
        let mut name = stem.clone();
        let mut k = 1;
        while !used.insert(name.clone()) {
            k += 1;
            name = format!("{stem}-{k}");
        }
        write_table(&bands.join(format!("{name}.csv")), tables::BAND, &band_rows(&pred)?)?;
    }
    Ok(rows)
}

/// Band rows from a prediction dump. Two-input problems are cut along the
/// first coordinate at the grid value of the second coordinate closest to
/// the middle of its range.
pub fn band_rows(pred: &Path) -> Result<Vec<Vec<String>>> {
    let (layout, recs) = [tables::PREDICTIONS_1D, tables::PREDICTIONS_2D, tables::PREDICTIONS_SPACE_TIME]
        .into_iter()
        .find_map(|h| read_table(pred, h).ok().map(|r| (h, r)))
        .ok_or_else(|| PinnError::Schema {
            path: pred.display().to_string(),
            reason: "header matches no prediction layout".into(),
        })?;
    let n_in = layout.len() - 3;
    let mut parsed = Vec::with_capacity(recs.len());
    for rec in &recs {
        let mut v = Vec::with_capacity(layout.len());
        for i in 0..layout.len() {
            v.push(parse_cell(pred, rec, i)?.unwrap_or(f64::NAN));
        }
        parsed.push(v);
    }
    if n_in == 2 && !parsed.is_empty() {
        let lo = parsed.iter().map(|r| r[1]).fold(f64::INFINITY, f64::min);
        let hi = parsed.iter().map(|r| r[1]).fold(f64::NEG_INFINITY, f64::max);
        let mid = 0.5 * (lo + hi);
        let cut = parsed
            .iter()
            .map(|r| r[1])
            .min_by(|a, b| (a - mid).abs().total_cmp(&(b - mid).abs()))
            .unwrap_or(mid);
        parsed.retain(|r| r[1] == cut);
    }
    Ok(parsed
        .iter()
        .map(|r| {
            let (u, mu, sigma) = (r[n_in], r[n_in + 1], r[n_in + 2]);
            [r[0], u, mu, mu - 2.0 * sigma, mu + 2.0 * sigma]
                .iter()
                .map(f64::to_string)
                .collect()
        })
        .collect())
}
