//! Experiment runner: configs, single runs, ablation sweeps and reports.

pub mod check;
mod config;
mod report;
mod run;
mod sweep;
pub mod tables;

pub use config::{ExperimentConfig, Method, Scale};
pub use report::{band_rows, report, ReportRow};
pub use run::{run, KappaStats, RunRecord, RunStatus, COVERAGE_LEVEL};
pub use sweep::{sweep, SweepAxis, SweepEntry};
