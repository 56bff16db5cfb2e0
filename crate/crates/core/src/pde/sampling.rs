use ndarray::Array2;
use rand::Rng;
use rand_distr::{Distribution, Normal, Open01};
use serde::{Deserialize, Serialize};

use super::PdeProblem;
use crate::error::{config_err, Result};
use crate::rng::{stream, Stream};

/// Largest grid resolution per axis accepted for gridded collocation.
const MAX_GRID_PER_AXIS: usize = 4096;

/// How many points of each kind to draw.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointCounts {
    pub collocation: usize,
    /// Interior `u` sensors; only used when the noise scale is positive.
    pub sensors: usize,
    /// Points per boundary edge in 2D (1D problems always use both endpoints).
    pub boundary_per_edge: usize,
    /// Points on the `t = 0` edge of time-dependent problems.
    pub initial: usize,
}

impl PointCounts {
    pub fn defaults(problem: &PdeProblem) -> Self {
        let (collocation, sensors) = match problem {
            PdeProblem::Poisson1d { .. } | PdeProblem::NonlinearPoisson1d { .. } => (100, 32),
            PdeProblem::Porous1d(_) => (64, 32),
            PdeProblem::NonlinearPoisson2d { .. } => (32 * 32, 32),
            PdeProblem::HeatInverse { .. } => (32 * 32, 64),
            PdeProblem::Burgers { .. } => (1000, 64),
        };
        PointCounts {
            collocation,
            sensors,
            boundary_per_edge: 64,
            initial: 64,
        }
    }
}

/// Training points of every channel for one run.
#[derive(Clone, Debug, PartialEq)]
pub struct PointSet {
    pub collocation: Array2<f64>,
    pub boundary: Array2<f64>,
    pub boundary_values: Vec<f64>,
    pub initial: Array2<f64>,
    pub initial_values: Vec<f64>,
    pub sensors: Array2<f64>,
    pub sensor_values: Vec<f64>,
    /// Standard deviation of the sensor noise, `rho * ||u||_inf`.
    pub noise_sigma: f64,
}

impl PointSet {
    /// Deterministic in `seed`. With `rho == 0` no sensors are placed.
    pub fn sample(problem: &PdeProblem, counts: &PointCounts, rho: f64, seed: u64) -> Result<Self> {
        if !(rho >= 0.0 && rho.is_finite()) {
            return Err(config_err(format!("noise scale must be finite and >= 0, got {rho}")));
        }
        let bounds = problem.bounds();
        let mut point_rng = stream(seed, Stream::Points);
        let collocation = match problem {
            PdeProblem::Burgers { .. } => uniform_interior(&bounds, counts.collocation, &mut point_rng),
            _ => interior_grid(&bounds, counts.collocation)?,
        };

        let (boundary, initial) = edges(problem, counts);
        let boundary_values = exact_values(problem, &boundary);
        let initial_values = exact_values(problem, &initial);

        let noise_sigma = rho * problem.u_inf_norm();
        let n_sensors = if rho > 0.0 { counts.sensors } else { 0 };
        let sensors = uniform_interior(&bounds, n_sensors, &mut point_rng);
        let normal = Normal::new(0.0, noise_sigma).map_err(|e| config_err(e.to_string()))?;
        let mut noise_rng = stream(seed, Stream::Noise);
        let sensor_values = exact_values(problem, &sensors)
            .into_iter()
            .map(|u| u + normal.sample(&mut noise_rng))
            .collect();

        Ok(PointSet {
            collocation,
            boundary,
            boundary_values,
            initial,
            initial_values,
            sensors,
            sensor_values,
            noise_sigma,
        })
    }

    /// Boundary and initial points stacked; both feed the boundary loss channel.
    pub fn constraint_points(&self) -> (Array2<f64>, Vec<f64>) {
        let pts = ndarray::concatenate![ndarray::Axis(0), self.boundary, self.initial];
        let mut vals = self.boundary_values.clone();
        vals.extend_from_slice(&self.initial_values);
        (pts, vals)
    }
}

fn exact_values(problem: &PdeProblem, pts: &Array2<f64>) -> Vec<f64> {
    pts.rows()
        .into_iter()
        .map(|p| problem.exact_u(p.as_slice().expect("contiguous row")))
        .collect()
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.5 * (a + b)],
        _ => (0..n)
            .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// `n` evenly spaced points strictly inside `(a, b)`.
fn open_linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| a + (b - a) * (i + 1) as f64 / (n + 1) as f64)
        .collect()
}

fn interior_grid(bounds: &[(f64, f64)], n: usize) -> Result<Array2<f64>> {
    match bounds {
        [(a, b)] => {
            if n > MAX_GRID_PER_AXIS * MAX_GRID_PER_AXIS {
                return Err(config_err(format!("{n} collocation points exceed grid resolution")));
            }
            let xs = open_linspace(*a, *b, n);
            Ok(Array2::from_shape_vec((n, 1), xs).expect("shape"))
        }
        [(a0, b0), (a1, b1)] => {
            let side = (n as f64).sqrt().round() as usize;
            if side * side != n {
                return Err(config_err(format!(
                    "gridded 2D collocation needs a square count, got {n}"
                )));
            }
            if side > MAX_GRID_PER_AXIS {
                return Err(config_err(format!("{n} collocation points exceed grid resolution")));
            }
            let xs = open_linspace(*a0, *b0, side);
            let ys = open_linspace(*a1, *b1, side);
            Ok(product(&xs, &ys))
        }
        _ => Err(config_err("only 1D and 2D domains are supported")),
    }
}

fn product(xs: &[f64], ys: &[f64]) -> Array2<f64> {
    let mut data = Vec::with_capacity(2 * xs.len() * ys.len());
    for &x in xs {
        for &y in ys {
            data.push(x);
            data.push(y);
        }
    }
    Array2::from_shape_vec((xs.len() * ys.len(), 2), data).expect("shape")
}

fn uniform_interior<R: Rng>(bounds: &[(f64, f64)], n: usize, rng: &mut R) -> Array2<f64> {
    let dim = bounds.len();
    let mut data = Vec::with_capacity(n * dim);
    for _ in 0..n {
        for &(a, b) in bounds {
            let u: f64 = Open01.sample(rng);
            data.push(a + (b - a) * u);
        }
    }
    Array2::from_shape_vec((n, dim), data).expect("shape")
}

/// Boundary points and, for time-dependent problems, the initial edge.
fn edges(problem: &PdeProblem, counts: &PointCounts) -> (Array2<f64>, Array2<f64>) {
    let bounds = problem.bounds();
    let empty = Array2::zeros((0, bounds.len()));
    if let [(a, b)] = bounds[..] {
        return (Array2::from_shape_vec((2, 1), vec![a, b]).expect("shape"), empty);
    }
    let [(a0, b0), (a1, b1)] = bounds[..] else {
        unreachable!("benchmarks are one- or two-dimensional")
    };
    let m = counts.boundary_per_edge;
    let along0 = linspace(a0, b0, m);
    let along1 = linspace(a1, b1, m);
    let mut wall = Vec::new();
    for &s in &along1 {
        wall.extend_from_slice(&[a0, s]);
    }
    for &s in &along1 {
        wall.extend_from_slice(&[b0, s]);
    }
    let lower: Vec<f64> = linspace(a0, b0, if problem.is_time_dependent() { counts.initial } else { m })
        .into_iter()
        .flat_map(|s| [s, a1])
        .collect();
    let upper: Vec<f64> = along0.iter().flat_map(|&s| [s, b1]).collect();
    let to_array = |v: Vec<f64>| Array2::from_shape_vec((v.len() / 2, 2), v).expect("shape");
    match problem {
        PdeProblem::HeatInverse { .. } => (to_array(wall), to_array(lower)),
        PdeProblem::Burgers { .. } => {
            wall.extend(upper);
            (to_array(wall), to_array(lower))
        }
        _ => {
            wall.extend(lower);
            wall.extend(upper);
            (to_array(wall), empty)
        }
    }
}

/// Closed tensor grid with `per_axis` points along every axis.
pub fn dense_grid(bounds: &[(f64, f64)], per_axis: usize) -> Array2<f64> {
    match bounds {
        [(a, b)] => {
            let xs = linspace(*a, *b, per_axis);
            Array2::from_shape_vec((xs.len(), 1), xs).expect("shape")
        }
        [(a0, b0), (a1, b1)] => product(&linspace(*a0, *b0, per_axis), &linspace(*a1, *b1, per_axis)),
        _ => panic!("only 1D and 2D domains are supported"),
    }
}

/// Evaluation grid for metrics: 256 points in 1D, 64 x 64 in 2D.
pub fn validation_grid(problem: &PdeProblem) -> Array2<f64> {
    let per_axis = if problem.input_dim() == 1 { 256 } else { 64 };
    dense_grid(&problem.bounds(), per_axis)
}
