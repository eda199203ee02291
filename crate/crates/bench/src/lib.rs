//! Shared fixtures for the solver benchmarks.

use dbvp_core::{builtin, first_eigenvalue, LinearProblem, MeshFunction, NonlinearProblem};

/// A smooth sign-changing forcing on `1..=T`.
pub fn forcing(grid_size: usize) -> MeshFunction {
    MeshFunction::from_fn(grid_size, |t| (0.37 * t as f64).sin() + 0.5).expect("valid grid size")
}

/// Linear problem with shift `fraction · λ₁(T)`.
pub fn linear_problem(grid_size: usize, fraction: f64) -> LinearProblem {
    let lambda = fraction * first_eigenvalue(grid_size).expect("valid grid size");
    LinearProblem::new(lambda, forcing(grid_size), 1.0)
}

/// A built-in problem ready for iteration.
pub fn builtin_problem(name: &str, grid_size: usize) -> NonlinearProblem {
    NonlinearProblem::from_document(&builtin(name, grid_size).expect("known builtin")).expect("parses")
}
