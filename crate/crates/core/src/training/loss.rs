use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::autodiff::{sum, JetBatch, Real, Tape, Var};
use crate::error::{config_err, Result};
use crate::models::TapeField;
use crate::pde::{PdeProblem, PointSet};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossWeights {
    pub data: f64,
    pub pde: f64,
    pub bc: f64,
    pub kappa: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights {
            data: 1.0,
            pde: 1.0,
            bc: 10.0,
            kappa: 1.0,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        let all = [self.data, self.pde, self.bc, self.kappa];
        if all.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(config_err(format!("loss weights must be finite and >= 0, got {self:?}")));
        }
        Ok(())
    }
}

/// Unweighted channel losses and the weighted total.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LossTerms {
    pub total: f64,
    pub data: f64,
    pub pde: f64,
    pub bc: f64,
    pub kappa: f64,
}

/// Network inputs for every channel of a fixed point set.
#[derive(Clone, Debug)]
pub struct Batches {
    pub collocation: JetBatch,
    pub sources: Vec<f64>,
    collocation_points: Array2<f64>,
    pub constraint: JetBatch,
    pub constraint_values: Vec<f64>,
    pub sensors: JetBatch,
    pub sensor_values: Vec<f64>,
}

impl Batches {
    pub fn new(problem: &PdeProblem, points: &PointSet) -> Result<Self> {
        let collocation = JetBatch::from_points(points.collocation.view(), &problem.jet_dirs())?;
        let sources = points
            .collocation
            .rows()
            .into_iter()
            .map(|p| problem.source(p.as_slice().expect("contiguous row")))
            .collect();
        let (constraint_pts, constraint_values) = points.constraint_points();
        Ok(Batches {
            collocation,
            sources,
            collocation_points: points.collocation.clone(),
            constraint: JetBatch::from_points(constraint_pts.view(), &[])?,
            constraint_values,
            sensors: JetBatch::from_points(points.sensors.view(), &[])?,
            sensor_values: points.sensor_values.clone(),
        })
    }

    pub fn collocation_point(&self, i: usize) -> &[f64] {
        self.collocation_points
            .row(i)
            .to_slice()
            .expect("contiguous row")
    }
}

/// Where the diffusivity of the inverse problem comes from.
#[derive(Clone, Copy, Debug)]
pub enum KappaSource<'t> {
    /// Output channel 1 of the network, pointwise.
    Field,
    /// One scalar shared by every point (a sampled latent).
    Latent(Var<'t>),
}

/// Per-point residuals of every active channel.
#[derive(Clone, Debug, Default)]
pub struct Residuals<'t> {
    pub pde: Vec<Var<'t>>,
    pub bc: Vec<Var<'t>>,
    pub data: Vec<Var<'t>>,
    /// Pointwise kappa field over the collocation set (inverse problem only).
    pub kappa_field: Vec<Var<'t>>,
}

/// Evaluate the channels of `batches` with `record`, which places the model
/// output for one input batch on the tape.
pub fn residuals<'t, F>(
    problem: &PdeProblem,
    batches: &Batches,
    mut record: F,
    kappa: KappaSource<'t>,
) -> Result<Residuals<'t>>
where
    F: FnMut(&JetBatch) -> Result<TapeField<'t>>,
{
    let mut out = Residuals::default();
    let n_colloc = batches.collocation.layout().n_points();
    if n_colloc > 0 {
        let field = record(&batches.collocation)?;
        for i in 0..n_colloc {
            let jets = field.jets(i, 0);
            let latent = if problem.is_inverse() {
                Some(match kappa {
                    KappaSource::Field => {
                        let k = field.value(i, 1);
                        out.kappa_field.push(k);
                        k
                    }
                    KappaSource::Latent(k) => k,
                })
            } else {
                None
            };
            let r = problem.operator(&jets, latent)? - batches.sources[i];
            out.pde.push(r);
        }
    }
    let n_constraint = batches.constraint.layout().n_points();
    if n_constraint > 0 {
        let field = record(&batches.constraint)?;
        out.bc = (0..n_constraint)
            .map(|i| field.value(i, 0) - batches.constraint_values[i])
            .collect();
    }
    let n_sensors = batches.sensors.layout().n_points();
    if n_sensors > 0 {
        let field = record(&batches.sensors)?;
        out.data = (0..n_sensors)
            .map(|i| field.value(i, 0) - batches.sensor_values[i])
            .collect();
    }
    Ok(out)
}

pub(crate) fn sum_squares<'t>(vars: &[Var<'t>]) -> Option<Var<'t>> {
    let squares: Vec<_> = vars.iter().map(|v| v.square()).collect();
    sum(&squares)
}

fn mean_square<'t>(vars: &[Var<'t>]) -> Option<Var<'t>> {
    sum_squares(vars).map(|s| s * (1.0 / vars.len() as f64))
}

/// Population variance of a field over the collocation set.
pub fn kappa_penalty<T: Real>(values: &[T]) -> Result<T> {
    if values.len() < 2 {
        return Err(config_err(format!(
            "kappa penalty needs at least 2 collocation points, got {}",
            values.len()
        )));
    }
    // Two passes over values shifted by the first entry, so a constant field
    // gives exactly zero.
    let inv_n = 1.0 / values.len() as f64;
    let shifted: Vec<T> = values.iter().map(|&v| v - values[0]).collect();
    let total = shifted[1..].iter().fold(shifted[0], |acc, &d| acc + d);
    let mean = total * inv_n;
    let dev2 = shifted
        .iter()
        .map(|&d| (d - mean) * (d - mean))
        .reduce(|a, b| a + b)
        .expect("non-empty");
    Ok(dev2 * inv_n)
}

/// Weighted mean-square loss; finalizes the tape on the total.
///
/// Empty channels contribute nothing.
pub fn composite_loss<'t>(
    tape: &'t Tape,
    res: &Residuals<'t>,
    weights: &LossWeights,
) -> Result<LossTerms> {
    let mut terms = LossTerms::default();
    let mut parts = Vec::new();
    for (vars, w, slot) in [
        (&res.data, weights.data, &mut terms.data),
        (&res.pde, weights.pde, &mut terms.pde),
        (&res.bc, weights.bc, &mut terms.bc),
    ] {
        if let Some(m) = mean_square(vars) {
            *slot = m.val();
            parts.push(m * w);
        }
    }
    if !res.kappa_field.is_empty() {
        let k = kappa_penalty(&res.kappa_field)?;
        terms.kappa = k.val();
        parts.push(k * weights.kappa);
    }
    let total = sum(&parts).unwrap_or_else(|| tape.constant(0.0));
    terms.total = total.val();
    tape.finalize(total)?;
    Ok(terms)
}
