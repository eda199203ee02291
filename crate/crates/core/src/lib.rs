//! Solvers for nonlinear discrete two-point boundary value problems
//!
//! ```text
//! -Δ²y(t-1) = f(t, y(t)),  t = 1..=T,   y(0) = y(T+1) = 0
//! ```
//!
//! by monotone iteration between a lower and an upper solution, together with
//! the Green's kernels and maximum-principle checks the method rests on.

// `!(a < b)` is used on purpose so that NaN fails the check
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod expr;
pub mod greens;
pub mod grid;
pub mod linear;
pub mod monotone;
pub mod problems;

pub use error::{Error, Result};
pub use expr::{parse, Bindings, EvalFault, Expr};
pub use greens::{
    build_kernel, certify_kernel, check_maximum_principle, homogeneous_factor, solve_via_green,
    verify_negativity, GreensKernel, HomogeneousFactor, KernelCase,
};
pub use grid::MeshFunction;
pub use linear::{eigenvalues, first_eigenvalue, residual_linear, solve_linear, LinearProblem, Spectrum};
pub use monotone::{
    check_uniqueness, choose_shift, estimate_one_sided_lipschitz, is_lower_solution, is_upper_solution,
    monotone_iterate, residual_nonlinear, Bracket, IterationResult, IterationTrace, LipschitzSampling,
    NonlinearProblem, Outcome, UniquenessVerdict,
};
pub use problems::{builtin, ProblemDocument};
