//! Benchmark problems: operators on jets, exact solutions, manufactured sources.
//!
//! Two-dimensional problems use axis 0 for `x` and axis 1 for `y` or `t`.

mod sampling;

pub use sampling::{dense_grid, validation_grid, PointCounts, PointSet};

use std::f64::consts::PI;

use crate::autodiff::{Direction, Real};
use crate::error::{config_err, usage_err, Result};

pub const PROBLEM_NAMES: [&str; 6] = [
    "poisson1d",
    "nonlinear_poisson1d",
    "porous1d",
    "nonlinear_poisson2d",
    "heat_inverse",
    "burgers",
];

/// Darcy-Brinkman channel constants.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PorousParams {
    pub nu_e: f64,
    pub nu: f64,
    pub phi: f64,
    pub permeability: f64,
    pub height: f64,
    pub forcing: f64,
}

impl PorousParams {
    pub fn r(&self) -> f64 {
        (self.nu * self.phi / (self.nu_e * self.permeability)).sqrt()
    }

    fn amplitude(&self) -> f64 {
        self.forcing * self.permeability / self.nu
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PdeProblem {
    /// `lambda u'' = f` on [-1, 1], `u = sin^3(6x)`.
    Poisson1d { lambda: f64 },
    /// `lambda u'' + k tanh(u) = f` on [-0.7, 0.7], `u = sin^3(6x)`.
    NonlinearPoisson1d { lambda: f64, k: f64 },
    /// `-(nu_e/phi) u'' + (nu/K) u = f` on [0, H] with no-slip walls.
    Porous1d(PorousParams),
    /// `lambda (u_xx + u_yy) + u (u^2 - 1) = f` on [-1, 1]^2, `u = sin(pi x) sin(pi y)`.
    NonlinearPoisson2d { lambda: f64 },
    /// `u_t = kappa u_xx` on [0, 1]^2 with `u(x, 0) = sin(pi x)` and zero walls.
    /// The operator reads kappa from a latent; `kappa_true` only generates data.
    HeatInverse { kappa_true: f64 },
    /// `u_t + u u_x - nu u_xx = f` on [-1, 1] x [0, 1], `u = sin(k x + omega t)`.
    Burgers { nu: f64, k_wave: f64, omega: f64 },
}

/// Value and per-axis derivatives of the solution at one point.
///
/// Entries an operator does not read may be left as `None`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jets<T> {
    pub value: T,
    pub d1: [Option<T>; 2],
    pub d2: [Option<T>; 2],
}

impl<T: Copy> Jets<T> {
    pub fn new(value: T) -> Self {
        Jets {
            value,
            d1: [None; 2],
            d2: [None; 2],
        }
    }

    pub fn d1(&self, axis: usize) -> Result<T> {
        self.d1
            .get(axis)
            .copied()
            .flatten()
            .ok_or_else(|| usage_err(format!("first derivative along axis {axis} not supplied")))
    }

    pub fn d2(&self, axis: usize) -> Result<T> {
        self.d2
            .get(axis)
            .copied()
            .flatten()
            .ok_or_else(|| usage_err(format!("second derivative along axis {axis} not supplied")))
    }
}

impl PdeProblem {
    pub fn poisson1d() -> Self {
        PdeProblem::Poisson1d { lambda: 0.01 }
    }

    pub fn nonlinear_poisson1d() -> Self {
        PdeProblem::NonlinearPoisson1d {
            lambda: 0.01,
            k: 0.7,
        }
    }

    pub fn porous1d() -> Self {
        PdeProblem::Porous1d(PorousParams {
            nu_e: 1e-3,
            nu: 1e-3,
            phi: 0.4,
            permeability: 1e-3,
            height: 1.0,
            forcing: 1.0,
        })
    }

    pub fn nonlinear_poisson2d() -> Self {
        PdeProblem::NonlinearPoisson2d { lambda: 0.01 }
    }

    pub fn heat_inverse() -> Self {
        PdeProblem::HeatInverse { kappa_true: 0.1 }
    }

    pub fn burgers() -> Self {
        PdeProblem::Burgers {
            nu: 0.01 / PI,
            k_wave: PI,
            omega: 2.0,
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Ok(match name {
            "poisson1d" => Self::poisson1d(),
            "nonlinear_poisson1d" => Self::nonlinear_poisson1d(),
            "porous1d" => Self::porous1d(),
            "nonlinear_poisson2d" => Self::nonlinear_poisson2d(),
            "heat_inverse" => Self::heat_inverse(),
            "burgers" => Self::burgers(),
            other => {
                return Err(config_err(format!(
                    "unknown problem '{other}', expected one of {}",
                    PROBLEM_NAMES.join(", ")
                )))
            }
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            PdeProblem::Poisson1d { .. } => "poisson1d",
            PdeProblem::NonlinearPoisson1d { .. } => "nonlinear_poisson1d",
            PdeProblem::Porous1d(_) => "porous1d",
            PdeProblem::NonlinearPoisson2d { .. } => "nonlinear_poisson2d",
            PdeProblem::HeatInverse { .. } => "heat_inverse",
            PdeProblem::Burgers { .. } => "burgers",
        }
    }

    pub fn input_dim(&self) -> usize {
        self.bounds().len()
    }

    /// Network output channels: the inverse problem adds a raw kappa field.
    pub fn output_dim(&self) -> usize {
        if self.is_inverse() {
            2
        } else {
            1
        }
    }

    pub fn is_inverse(&self) -> bool {
        matches!(self, PdeProblem::HeatInverse { .. })
    }

    /// Whether axis 1 is time (initial data instead of a wall at its lower end).
    pub fn is_time_dependent(&self) -> bool {
        matches!(
            self,
            PdeProblem::HeatInverse { .. } | PdeProblem::Burgers { .. }
        )
    }

    /// Closed interval per input axis.
    pub fn bounds(&self) -> Vec<(f64, f64)> {
        match self {
            PdeProblem::Poisson1d { .. } => vec![(-1.0, 1.0)],
            PdeProblem::NonlinearPoisson1d { .. } => vec![(-0.7, 0.7)],
            PdeProblem::Porous1d(p) => vec![(0.0, p.height)],
            PdeProblem::NonlinearPoisson2d { .. } => vec![(-1.0, 1.0), (-1.0, 1.0)],
            PdeProblem::HeatInverse { .. } => vec![(0.0, 1.0), (0.0, 1.0)],
            PdeProblem::Burgers { .. } => vec![(-1.0, 1.0), (0.0, 1.0)],
        }
    }

    /// Jet directions the operator needs; time axes carry first derivatives only.
    pub fn jet_dirs(&self) -> Vec<Direction> {
        match self {
            PdeProblem::Poisson1d { .. }
            | PdeProblem::NonlinearPoisson1d { .. }
            | PdeProblem::Porous1d(_) => vec![Direction::second(0)],
            PdeProblem::NonlinearPoisson2d { .. } => {
                vec![Direction::second(0), Direction::second(1)]
            }
            PdeProblem::HeatInverse { .. } | PdeProblem::Burgers { .. } => {
                vec![Direction::second(0), Direction::first(1)]
            }
        }
    }

    /// Named constants, for logs and reports.
    pub fn constants(&self) -> Vec<(&'static str, f64)> {
        match *self {
            PdeProblem::Poisson1d { lambda } => vec![("lambda", lambda)],
            PdeProblem::NonlinearPoisson1d { lambda, k } => vec![("lambda", lambda), ("k", k)],
            PdeProblem::Porous1d(p) => vec![
                ("nu_e", p.nu_e),
                ("nu", p.nu),
                ("phi", p.phi),
                ("K", p.permeability),
                ("H", p.height),
                ("f", p.forcing),
                ("r", p.r()),
            ],
            PdeProblem::NonlinearPoisson2d { lambda } => vec![("lambda", lambda)],
            PdeProblem::HeatInverse { kappa_true } => vec![("kappa_true", kappa_true)],
            PdeProblem::Burgers { nu, k_wave, omega } => {
                vec![("nu", nu), ("k_wave", k_wave), ("omega", omega)]
            }
        }
    }

    pub fn exact_u(&self, point: &[f64]) -> f64 {
        self.exact_jets(point).value
    }

    /// Closed-form value and derivatives of the exact solution.
    pub fn exact_jets(&self, point: &[f64]) -> Jets<f64> {
        let x = point[0];
        match *self {
            PdeProblem::Poisson1d { .. } | PdeProblem::NonlinearPoisson1d { .. } => {
                let (s, c) = (6.0 * x).sin_cos();
                Jets {
                    value: s * s * s,
                    d1: [Some(18.0 * s * s * c), None],
                    d2: [Some(216.0 * s * c * c - 108.0 * s * s * s), None],
                }
            }
            PdeProblem::Porous1d(p) => {
                let r = p.r();
                let a = p.amplitude();
                let arg = r * (x - p.height / 2.0);
                let denom = (r * p.height / 2.0).cosh();
                Jets {
                    value: a * (1.0 - arg.cosh() / denom),
                    d1: [Some(-a * r * arg.sinh() / denom), None],
                    d2: [Some(-a * r * r * arg.cosh() / denom), None],
                }
            }
            PdeProblem::NonlinearPoisson2d { .. } => {
                let (sx, cx) = (PI * x).sin_cos();
                let (sy, cy) = (PI * point[1]).sin_cos();
                let u = sx * sy;
                Jets {
                    value: u,
                    d1: [Some(PI * cx * sy), Some(PI * sx * cy)],
                    d2: [Some(-PI * PI * u), Some(-PI * PI * u)],
                }
            }
            PdeProblem::HeatInverse { kappa_true } => {
                let t = point[1];
                let (sx, cx) = (PI * x).sin_cos();
                let decay = (-kappa_true * PI * PI * t).exp();
                let u = sx * decay;
                Jets {
                    value: u,
                    d1: [Some(PI * cx * decay), Some(-kappa_true * PI * PI * u)],
                    d2: [Some(-PI * PI * u), Some(kappa_true * kappa_true * PI.powi(4) * u)],
                }
            }
            PdeProblem::Burgers { k_wave, omega, .. } => {
                let (s, c) = (k_wave * x + omega * point[1]).sin_cos();
                Jets {
                    value: s,
                    d1: [Some(k_wave * c), Some(omega * c)],
                    d2: [Some(-k_wave * k_wave * s), Some(-omega * omega * s)],
                }
            }
        }
    }

    /// `N_x(u)`; the inverse problem reads its diffusivity from `latent`.
    pub fn operator<T: Real>(&self, jets: &Jets<T>, latent: Option<T>) -> Result<T> {
        let u = jets.value;
        Ok(match *self {
            PdeProblem::Poisson1d { lambda } => jets.d2(0)? * lambda,
            PdeProblem::NonlinearPoisson1d { lambda, k } => jets.d2(0)? * lambda + u.tanh() * k,
            PdeProblem::Porous1d(p) => {
                jets.d2(0)? * (-p.nu_e / p.phi) + u * (p.nu / p.permeability)
            }
            PdeProblem::NonlinearPoisson2d { lambda } => {
                (jets.d2(0)? + jets.d2(1)?) * lambda + u * u * u - u
            }
            PdeProblem::HeatInverse { .. } => {
                let kappa = latent.ok_or_else(|| {
                    usage_err("heat_inverse residual needs a diffusivity latent")
                })?;
                jets.d1(1)? - kappa * jets.d2(0)?
            }
            PdeProblem::Burgers { nu, .. } => jets.d1(1)? + u * jets.d1(0)? - jets.d2(0)? * nu,
        })
    }

    /// Source term `f` obtained by applying the operator to the exact solution.
    pub fn source(&self, point: &[f64]) -> f64 {
        match *self {
            // Closed forms built for a constant force and a source-free equation.
            PdeProblem::Porous1d(p) => p.forcing,
            PdeProblem::HeatInverse { .. } => 0.0,
            _ => {
                let jets = self.exact_jets(point);
                self.operator(&jets, None)
                    .expect("forward problems need no latent")
            }
        }
    }

    /// `N_x(u) - f(point)`.
    pub fn residual<T: Real>(&self, jets: &Jets<T>, latent: Option<T>, point: &[f64]) -> Result<T> {
        Ok(self.operator(jets, latent)? - self.source(point))
    }

    /// Sup norm of the exact solution on a dense closed grid.
    pub fn u_inf_norm(&self) -> f64 {
        let per_axis = if self.input_dim() == 1 { 1024 } else { 128 };
        let grid = dense_grid(&self.bounds(), per_axis);
        grid.rows()
            .into_iter()
            .map(|p| self.exact_u(p.as_slice().expect("contiguous row")).abs())
            .fold(0.0, f64::max)
    }
}
