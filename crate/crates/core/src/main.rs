use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use epinn::experiment::{self, check, ExperimentConfig, RunStatus, Scale, SweepAxis};
use epinn::PinnError;

/// `println!` that ignores a closed stdout (e.g. piped into `head`).
macro_rules! say {
    ($($arg:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

/// Physics-informed neural networks with epinet, MC-dropout and HMC uncertainty.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train or sample one configuration and write its metrics and plot data.
    Run(ConfigArgs),
    /// Repeat a run while varying one quantity.
    Sweep {
        #[command(flatten)]
        config: ConfigArgs,
        /// n_colloc, epinet_width, epinet_epochs, base_epochs or rho.
        #[arg(long)]
        axis: String,
        /// Comma-separated values; defaults to the ablation grid of the axis.
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        values: Option<Vec<f64>>,
    },
    /// Merge the metrics of finished runs and emit band files.
    Report {
        #[arg(required = true)]
        runs: Vec<PathBuf>,
        #[arg(long, default_value = "report")]
        out: PathBuf,
    },
    /// Run the built-in oracle and invariant checks.
    Check,
}

#[derive(Args)]
struct ConfigArgs {
    /// JSON config; keys it omits take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    problem: Option<String>,
    /// epinn, dropout or bpinn.
    #[arg(long)]
    method: Option<String>,
    /// desk or paper.
    #[arg(long, default_value = "desk")]
    scale: String,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override a config key, e.g. --set points.collocation=500.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl ConfigArgs {
    fn scale(&self) -> Result<Scale> {
        Ok(Scale::parse(&self.scale)?)
    }

    fn load(&self) -> Result<ExperimentConfig> {
        let partial = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading {}", path.display()))?;
                serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
            }
            None => serde_json::Value::Null,
        };
        let mut overrides = Vec::new();
        if let Some(p) = &self.problem {
            overrides.push(format!("problem={}", serde_json::to_string(p)?));
        }
        if let Some(m) = &self.method {
            overrides.push(format!("method={}", serde_json::to_string(m)?));
        }
        if let Some(s) = self.seed {
            overrides.push(format!("seed={s}"));
        }
        if let Some(o) = &self.out {
            overrides.push(format!("out_dir={}", serde_json::to_string(o)?));
        }
        overrides.extend(self.overrides.iter().cloned());
        Ok(ExperimentConfig::from_partial(partial, &overrides, self.scale()?)?)
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            match e.downcast_ref::<PinnError>() {
                Some(PinnError::Diverged { .. } | PinnError::Sampler(_)) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Run(args) => {
            let cfg = args.load()?;
            let rec = experiment::run(&cfg)?;
            for w in &rec.warnings {
                eprintln!("warning: {w}");
            }
            if let Some(m) = &rec.metrics {
                say!(
                    "{} rho={} sharpness={:.4} coverage={:.3} rmse={:.4e} time_s={:.1}",
                    m.method, m.rho, m.sharpness, m.coverage, m.rmse, m.time_s
                );
            }
            if let Some(k) = &rec.kappa {
                say!("kappa mean={:.4} std={:.4}", k.mean, k.std);
            }
            say!("wrote {}", cfg.out_dir.display());
            if rec.status == RunStatus::Failed {
                eprintln!("run failed: {}", rec.error.unwrap_or_default());
                return Ok(ExitCode::from(2));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Sweep { config, axis, values } => {
            let base = config.load()?;
            let axis = SweepAxis::parse(&axis)?;
            let values = values.unwrap_or_else(|| axis.default_values(config.scale().unwrap_or_default()));
            let out = base.out_dir.clone();
            let entries = experiment::sweep(&base, axis, &values, &out)?;
            for e in &entries {
                match &e.outcome {
                    Ok(rec) => match &rec.metrics {
                        Some(m) => say!(
                            "{}={} sharpness={:.4} coverage={:.3} rmse={:.4e}",
                            axis.name(),
                            e.value,
                            m.sharpness,
                            m.coverage,
                            m.rmse
                        ),
                        None => say!("{}={} failed: {}", axis.name(), e.value, rec.error.clone().unwrap_or_default()),
                    },
                    Err(msg) => say!("{}={} invalid: {msg}", axis.name(), e.value),
                }
            }
            say!("wrote {}", out.join("sweep.csv").display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Report { runs, out } => {
            let rows = experiment::report(&runs, &out)?;
            for r in &rows {
                say!("{}", r.cells.join(","));
            }
            say!("wrote {}", out.join("report.csv").display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Check => {
            let outcomes = check::self_check();
            for o in &outcomes {
                say!("{} {}: {}", if o.passed { "PASS" } else { "FAIL" }, o.name, o.detail);
            }
            Ok(if outcomes.iter().all(|o| o.passed) {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
    }
}
