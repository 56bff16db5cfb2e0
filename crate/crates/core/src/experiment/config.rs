use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::bayes::HmcConfig;
use crate::error::{config_err, Result};
use crate::models::EpinetConfig;
use crate::pde::{PdeProblem, PointCounts};
use crate::training::{LossWeights, TrainOptions};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Epinn,
    Dropout,
    Bpinn,
}

impl Method {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "epinn" => Ok(Method::Epinn),
            "dropout" => Ok(Method::Dropout),
            "bpinn" => Ok(Method::Bpinn),
            other => Err(config_err(format!("unknown method {other:?} (epinn, dropout, bpinn)"))),
        }
    }
}

/// Default budgets: `Desk` is the reduced schedule used for acceptance,
/// `Paper` the full published one.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    #[default]
    Desk,
    Paper,
}

impl Scale {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "desk" => Ok(Scale::Desk),
            "paper" => Ok(Scale::Paper),
            other => Err(config_err(format!("unknown scale {other:?} (desk, paper)"))),
        }
    }
}

/// Everything that determines one run. Serialized in full next to its outputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: String,
    pub method: Method,
    /// Sensor noise as a fraction of `||u||_inf`.
    pub rho: f64,
    /// Required for `dropout`, forbidden otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dropout_rate: Option<f64>,
    pub seed: u64,
    /// Hidden widths of the base, dropout and B-PINN networks.
    pub hidden: Vec<usize>,
    /// Epochs of the base PINN, also used for the dropout PINN.
    pub base_epochs: usize,
    pub epinet_epochs: usize,
    pub lr: f64,
    pub log_every: usize,
    pub weights: LossWeights,
    pub epinet: EpinetConfig,
    pub points: PointCounts,
    pub hmc: HmcConfig,
    /// Monte Carlo members for E-PINN and dropout prediction.
    pub members: usize,
    pub out_dir: PathBuf,
}

impl ExperimentConfig {
    /// Defaults for `problem` and `method` at the given scale.
    pub fn defaults(problem: &str, method: Method, scale: Scale) -> Result<Self> {
        let pde = PdeProblem::from_name(problem)?;
        let (base_epochs, epinet_epochs, total, burn_in, members) = match scale {
            Scale::Desk => (30_000, 5_000, 2_500, 500, 2_000),
            Scale::Paper => (100_000, 10_000, 11_000, 1_000, 10_000),
        };
        let step_size = match pde {
            PdeProblem::NonlinearPoisson2d { .. } => 1e-5,
            _ => 5e-5,
        };
        Ok(ExperimentConfig {
            problem: problem.to_string(),
            method,
            rho: if method == Method::Bpinn { 0.1 } else { 0.0 },
            dropout_rate: (method == Method::Dropout).then_some(0.05),
            seed: 0,
            hidden: vec![32, 32, 32],
            base_epochs,
            epinet_epochs,
            lr: 1e-3,
            log_every: 100,
            weights: LossWeights::default(),
            epinet: EpinetConfig::default(),
            points: PointCounts::defaults(&pde),
            hmc: HmcConfig {
                step_size,
                leapfrog_steps: 50,
                burn_in,
                total,
            },
            members,
            out_dir: PathBuf::from("runs").join(format!("{problem}-{}", method_slug(method))),
        })
    }

    /// Build a config from a partial JSON object plus dotted `key=value`
    /// overrides. `problem` and `method` choose the defaults that unspecified
    /// keys take.
    pub fn from_partial(partial: Value, overrides: &[String], scale: Scale) -> Result<Self> {
        let mut patch = match partial {
            Value::Object(m) => Value::Object(m),
            Value::Null => Value::Object(Map::new()),
            _ => return Err(config_err("experiment config must be a JSON object")),
        };
        for o in overrides {
            apply_override(&mut patch, o)?;
        }
        let problem = patch
            .get("problem")
            .and_then(Value::as_str)
            .ok_or_else(|| config_err("config needs a \"problem\" name"))?
            .to_string();
        let method = Method::parse(
            patch
                .get("method")
                .and_then(Value::as_str)
                .ok_or_else(|| config_err("config needs a \"method\" (epinn, dropout, bpinn)"))?,
        )?;
        let mut full = serde_json::to_value(Self::defaults(&problem, method, scale)?)?;
        if method != Method::Dropout {
            if let Value::Object(m) = &mut full {
                m.remove("dropout_rate");
            }
        }
        merge(&mut full, patch);
        let cfg: ExperimentConfig =
            serde_json::from_value(full).map_err(|e| config_err(format!("invalid config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, overrides: &[String], scale: Scale) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let value: Value = serde_json::from_str(&text)
            .map_err(|e| config_err(format!("{}: {e}", path.display())))?;
        Self::from_partial(value, overrides, scale)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        let problem = PdeProblem::from_name(&self.problem)?;
        if !(self.rho >= 0.0 && self.rho.is_finite()) {
            return Err(config_err(format!("rho must be finite and >= 0, got {}", self.rho)));
        }
        match (self.method, self.dropout_rate) {
            (Method::Dropout, None) => return Err(config_err("dropout runs need a dropout_rate")),
            (Method::Dropout, Some(p)) if !(p > 0.0 && p < 1.0) => {
                return Err(config_err(format!("dropout_rate must lie in (0, 1), got {p}")))
            }
            (Method::Epinn | Method::Bpinn, Some(_)) => {
                return Err(config_err("dropout_rate is only valid for dropout runs"))
            }
            _ => {}
        }
        if self.method == Method::Bpinn {
            if self.rho <= 0.0 {
                return Err(config_err("B-PINN needs interior data: rho must be > 0"));
            }
            self.hmc.validate()?;
        }
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return Err(config_err("hidden widths must be non-empty and positive"));
        }
        if self.epinet.hidden.contains(&0) || self.epinet.prior_hidden.contains(&0) {
            return Err(config_err("epinet widths must be positive"));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(config_err(format!("learning rate must be positive, got {}", self.lr)));
        }
        if self.members < 2 {
            return Err(config_err("at least 2 Monte Carlo members are required"));
        }
        if problem.is_inverse() && self.points.collocation < 2 {
            return Err(config_err("the inverse problem needs at least 2 collocation points"));
        }
        self.weights.validate()
    }

    pub fn pde(&self) -> Result<PdeProblem> {
        PdeProblem::from_name(&self.problem)
    }

    pub(crate) fn train_options(&self, epochs: usize) -> TrainOptions {
        TrainOptions {
            epochs,
            lr: self.lr,
            weights: self.weights,
            log_every: self.log_every,
        }
    }

    /// Table label, e.g. `E-PINN` or `Dropout 5%`.
    pub fn method_label(&self) -> String {
        match self.method {
            Method::Epinn => "E-PINN".to_string(),
            Method::Bpinn => "B-PINN".to_string(),
            Method::Dropout => {
                let pct = 100.0 * self.dropout_rate.unwrap_or(0.0);
                format!("Dropout {}%", format_number(pct))
            }
        }
    }
}

fn method_slug(m: Method) -> &'static str {
    match m {
        Method::Epinn => "epinn",
        Method::Dropout => "dropout",
        Method::Bpinn => "bpinn",
    }
}

/// Shortest decimal that reads back as `v` after rounding to 1e-9.
fn format_number(v: f64) -> String {
    let r = (v * 1e9).round() / 1e9;
    format!("{r}")
}

/// Set `a.b.c=value` in a JSON object. The value is parsed as JSON when
/// possible and kept as a string otherwise.
fn apply_override(target: &mut Value, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| config_err(format!("override {assignment:?} is not key=value")))?;
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = target;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        if part.is_empty() {
            return Err(config_err(format!("override key {key:?} has an empty segment")));
        }
        let Value::Object(map) = node else {
            return Err(config_err(format!("override key {key:?} descends into a non-object")));
        };
        if i + 1 == parts.len() {
            map.insert(part.to_string(), value);
            return Ok(());
        }
        node = map
            .entry(part.to_string())
            .or_insert_with(|| Value::Object(Map::new()));
    }
    Ok(())
}

/// Deep-merge `patch` into `base`; objects merge key by key, everything else
/// is replaced.
fn merge(base: &mut Value, patch: Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}
