use std::fs;
use std::path::Path;
use std::time::Instant;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, Method};
use super::tables::{self, fmt_opt, write_table};
use crate::autodiff::Architecture;
use crate::bayes::{self, write_chain, LikelihoodSpec, PinnPotential};
use crate::error::{PinnError, Result};
use crate::inverse::{histogram, kappa_draws, kappa_summarize, HISTOGRAM_BINS};
use crate::models::{write_checkpoint, BasePinn, DropoutPinn, Epinet};
use crate::pde::{validation_grid, PdeProblem, PointSet};
use crate::training::{train_base, train_dropout, train_epinet, TrainLog};
use crate::uq::{coverage, mc_predict, rmse, sharpness, MetricsReport, Predictor};

/// Coverage level reported in every table.
pub const COVERAGE_LEVEL: f64 = 0.95;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Completed,
    /// Training diverged or the sampler aborted; partial logs are kept.
    Failed,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KappaStats {
    pub mean: f64,
    pub std: f64,
}

/// What a run produced. Written as `run.json` in the output directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config: ExperimentConfig,
    pub status: RunStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub metrics: Option<MetricsReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<KappaStats>,
    /// Emitted files, relative to the output directory.
    pub files: Vec<String>,
    pub warnings: Vec<String>,
}

impl RunRecord {
    fn new(config: &ExperimentConfig) -> Self {
        RunRecord {
            config: config.clone(),
            status: RunStatus::Completed,
            error: None,
            metrics: None,
            kappa: None,
            files: Vec::new(),
            warnings: Vec::new(),
        }
    }

    fn path(&mut self, name: &str) -> std::path::PathBuf {
        if !self.files.iter().any(|f| f == name) {
            self.files.push(name.to_string());
        }
        self.config.out_dir.join(name)
    }

    fn save_log(&mut self, name: &str, log: &TrainLog) -> Result<()> {
        let path = self.path(name);
        log.write_csv(&path)
    }

    pub fn read(dir: &Path) -> Result<Self> {
        let text = fs::read_to_string(dir.join("run.json"))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Train or sample, evaluate on the validation grid and write every artifact
/// to `config.out_dir`. Divergence and sampler aborts yield a `Failed` record
/// rather than an error.
pub fn run(config: &ExperimentConfig) -> Result<RunRecord> {
    config.validate()?;
    fs::create_dir_all(&config.out_dir)?;
    let mut rec = RunRecord::new(config);
    let path = rec.path("config.json");
    fs::write(path, config.to_json()?)?;
    match execute(config, &mut rec) {
        Ok(()) => {}
        Err(e @ (PinnError::Diverged { .. } | PinnError::Sampler(_))) => {
            rec.status = RunStatus::Failed;
            rec.error = Some(e.to_string());
        }
        Err(e) => return Err(e),
    }
    let path = rec.path("run.json");
    fs::write(path, serde_json::to_string_pretty(&rec)?)?;
    Ok(rec)
}

fn execute(cfg: &ExperimentConfig, rec: &mut RunRecord) -> Result<()> {
    let pde = cfg.pde()?;
    let points = PointSet::sample(&pde, &cfg.points, cfg.rho, cfg.seed)?;
    let start = Instant::now();
    match cfg.method {
        Method::Epinn => {
            let arch = Architecture::new(pde.input_dim(), cfg.hidden.clone(), pde.output_dim())?;
            let mut base = BasePinn::new(&arch, cfg.seed)?;
            let mut log = TrainLog::default();
            let trained = train_base(&mut base, &pde, &points, &cfg.train_options(cfg.base_epochs), &mut log);
            rec.save_log("train_base.csv", &log)?;
            trained?;
            write_checkpoint(&rec.path("base.ckpt"), &base.params, cfg.seed, cfg.base_epochs)?;

            let mut epinet = Epinet::new(cfg.epinet.clone(), &arch, cfg.seed)?;
            let epinet_start = Instant::now();
            let mut log = TrainLog::default();
            let trained = train_epinet(
                &base,
                &mut epinet,
                &pde,
                &points,
                &cfg.train_options(cfg.epinet_epochs),
                cfg.seed,
                &mut log,
            );
            let time_epinet = epinet_start.elapsed().as_secs_f64();
            rec.save_log("train_epinet.csv", &log)?;
            trained?;
            write_checkpoint(&rec.path("epinet_learnable.ckpt"), &epinet.learnable, cfg.seed, cfg.epinet_epochs)?;
            write_checkpoint(&rec.path("epinet_prior.ckpt"), epinet.prior(), cfg.seed, 0)?;
            let timing = (start.elapsed().as_secs_f64(), Some(time_epinet));
            evaluate(cfg, rec, &pde, &points, &Predictor::Epinn { base: &base, epinet: &epinet }, timing)
        }
        Method::Dropout => {
            let arch = Architecture::new(pde.input_dim(), cfg.hidden.clone(), pde.output_dim())?;
            let rate = cfg.dropout_rate.unwrap_or_default();
            let mut model = DropoutPinn::new(&arch, rate, cfg.seed)?;
            let mut log = TrainLog::default();
            let opts = cfg.train_options(cfg.base_epochs);
            let trained = train_dropout(&mut model, &pde, &points, &opts, cfg.seed, &mut log);
            rec.save_log("train_dropout.csv", &log)?;
            trained?;
            write_checkpoint(&rec.path("dropout.ckpt"), &model.params, cfg.seed, cfg.base_epochs)?;
            let timing = (start.elapsed().as_secs_f64(), None);
            evaluate(cfg, rec, &pde, &points, &Predictor::Dropout(&model), timing)
        }
        Method::Bpinn => {
            let arch = Architecture::new(pde.input_dim(), cfg.hidden.clone(), 1)?;
            let mut pot = PinnPotential::new(&pde, &points, &arch, LikelihoodSpec::new(points.noise_sigma))?;
            let mut init = BasePinn::new(&arch, cfg.seed)?.params.into_flat();
            if pde.is_inverse() {
                init.push(0.0);
            }
            let chain = bayes::sample(&mut pot, init, &cfg.hmc, cfg.seed)?;
            rec.warnings.extend(chain.warnings.iter().cloned());
            if let Some(rate) = chain.acceptance_rate {
                rec.warnings.push(format!(
                    "HMC acceptance {rate:.4}, median |dH| {:.3e}, {} non-finite proposals",
                    chain.median_abs_delta_h, chain.nonfinite
                ));
            }
            write_chain(&rec.path("chain.bin"), &chain, &arch, cfg.seed)?;
            let timing = (start.elapsed().as_secs_f64(), None);
            evaluate(cfg, rec, &pde, &points, &Predictor::Bpinn { chain: &chain, arch: &arch }, timing)
        }
    }
}

fn evaluate(
    cfg: &ExperimentConfig,
    rec: &mut RunRecord,
    pde: &PdeProblem,
    points: &PointSet,
    predictor: &Predictor<'_>,
    (time_s, time_epinet_s): (f64, Option<f64>),
) -> Result<()> {
    let grid = validation_grid(pde);
    let exact = exact_on(pde, &grid);
    let ens = mc_predict(predictor, grid.view(), cfg.members, 0, cfg.seed)?;
    let report = MetricsReport {
        rho: cfg.rho,
        method: cfg.method_label(),
        sharpness: sharpness(&ens),
        coverage: coverage(&ens, &exact, COVERAGE_LEVEL)?,
        rmse: rmse(&ens, &exact)?,
        time_s,
        time_epinet_s,
        seed: cfg.seed,
    };
    write_table(
        &rec.path("metrics.csv"),
        tables::METRICS,
        &[vec![
            report.rho.to_string(),
            report.method.clone(),
            report.sharpness.to_string(),
            report.coverage.to_string(),
            report.rmse.to_string(),
            report.time_s.to_string(),
            fmt_opt(report.time_epinet_s),
        ]],
    )?;

    let header = prediction_header(pde);
    let std = ens.std();
    let rows: Vec<Vec<String>> = grid
        .rows()
        .into_iter()
        .enumerate()
        .map(|(i, x)| {
            let mut r: Vec<String> = x.iter().map(f64::to_string).collect();
            r.extend([exact[i], ens.mean()[i], std[i]].map(|v| v.to_string()));
            r
        })
        .collect();
    write_table(&rec.path("predictions.csv"), header, &rows)?;

    if pde.is_inverse() {
        let draws = kappa_draws(predictor, points.collocation.view(), cfg.members, cfg.seed)?;
        let summary = kappa_summarize(&draws, &report.method, cfg.rho)?;
        write_table(
            &rec.path("kappa.csv"),
            tables::KAPPA,
            &[vec![
                cfg.rho.to_string(),
                report.method.clone(),
                summary.mean.to_string(),
                summary.std.to_string(),
                time_s.to_string(),
            ]],
        )?;
        let bins: Vec<Vec<String>> = histogram(&draws, HISTOGRAM_BINS)?
            .iter()
            .map(|b| vec![b.bin_left.to_string(), b.bin_right.to_string(), b.count.to_string()])
            .collect();
        write_table(&rec.path("kappa_histogram.csv"), tables::KAPPA_HISTOGRAM, &bins)?;
        rec.kappa = Some(KappaStats {
            mean: summary.mean,
            std: summary.std,
        });
    }
    rec.metrics = Some(report);
    Ok(())
}

pub(crate) fn prediction_header(pde: &PdeProblem) -> &'static [&'static str] {
    if pde.input_dim() == 1 {
        tables::PREDICTIONS_1D
    } else if pde.is_time_dependent() {
        tables::PREDICTIONS_SPACE_TIME
    } else {
        tables::PREDICTIONS_2D
    }
}

fn exact_on(pde: &PdeProblem, grid: &Array2<f64>) -> Vec<f64> {
    grid.rows()
        .into_iter()
        .map(|r| pde.exact_u(r.as_slice().expect("contiguous row")))
        .collect()
}
