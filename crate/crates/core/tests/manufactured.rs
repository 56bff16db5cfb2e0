//! Exact solutions against independently derived sources and derivatives.

mod common;

use common::random_interior;
use epinn::pde::{PdeProblem, PROBLEM_NAMES};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn exact_solutions_have_vanishing_residuals() {
    for (name, direct, residual) in common::manufactured_residuals(1000, 99) {
        assert!(direct < 1e-8, "{name}: operator vs hand source {direct:e}");
        assert!(residual < 1e-8, "{name}: residual {residual:e}");
    }
}

#[test]
fn closed_form_jets_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for name in PROBLEM_NAMES {
        let problem = PdeProblem::from_name(name).unwrap();
        for _ in 0..200 {
            let x = random_interior(&problem, &mut rng);
            let jets = problem.exact_jets(&x);
            for axis in 0..x.len() {
                let f = |h: f64| {
                    let mut y = x.clone();
                    y[axis] += h;
                    problem.exact_u(&y)
                };
                let scale = 1.0 + jets.value.abs();
                if let Some(d1) = jets.d1[axis] {
                    let fd = (f(1e-6) - f(-1e-6)) / 2e-6;
                    assert!((d1 - fd).abs() < 1e-6 * scale * (1.0 + d1.abs()), "{name} d1 axis {axis}");
                }
                if let Some(d2) = jets.d2[axis] {
                    let fd = (f(1e-4) - 2.0 * f(0.0) + f(-1e-4)) / 1e-8;
                    assert!((d2 - fd).abs() < 1e-4 * (1.0 + d2.abs()), "{name} d2 axis {axis}");
                }
            }
        }
    }
}

#[test]
fn boundary_data_match_the_problem_statements() {
    let porous = PdeProblem::porous1d();
    assert!(porous.exact_u(&[0.0]).abs() < 1e-12);
    assert!(porous.exact_u(&[1.0]).abs() < 1e-12);
    let heat = PdeProblem::heat_inverse();
    assert!((heat.exact_u(&[0.5, 0.0]) - 1.0).abs() < 1e-15);
    assert!(heat.exact_u(&[0.0, 0.7]).abs() < 1e-15);
    let plane = PdeProblem::nonlinear_poisson2d();
    assert!(plane.exact_u(&[1.0, 0.3]).abs() < 1e-15);
    let poisson = PdeProblem::poisson1d();
    assert!((poisson.exact_u(&[0.4]) - (2.4f64).sin().powi(3)).abs() < 1e-15);
}
