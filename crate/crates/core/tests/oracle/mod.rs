//! Independent reference computations for the integration and acceptance tests.
//!
//! Nothing here calls into the solver library's numerics: eigenvalues come from
//! a dense symmetric eigensolver and nonlinear solutions from damped Newton
//! with dense LU.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Eigenvalues of `tridiag(-1, 2, -1)` of size `n`, ascending.
pub fn dense_laplacian_eigenvalues(n: usize) -> Vec<f64> {
    let a = DMatrix::from_fn(n, n, |i, j| match i.abs_diff(j) {
        0 => 2.0,
        1 => -1.0,
        _ => 0.0,
    });
    let mut ev: Vec<f64> = SymmetricEigen::new(a).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ev
}

/// Dense solve of `-y(t-1) + (2-λ)y(t) - y(t+1) = h(t)`, `y(0)=0`, `y(T+1)=b`.
/// Returns the full grid vector of length `T+2`.
pub fn dense_linear_solve(lambda: f64, h: &[f64], b: f64) -> Vec<f64> {
    let n = h.len();
    let a = DMatrix::from_fn(n, n, |i, j| match i.abs_diff(j) {
        0 => 2.0 - lambda,
        1 => -1.0,
        _ => 0.0,
    });
    let mut rhs = DVector::from_column_slice(h);
    rhs[n - 1] += b;
    let x = a.lu().solve(&rhs).expect("nonsingular");
    let mut y = vec![0.0];
    y.extend(x.iter());
    y.push(b);
    y
}

/// Damped Newton for `-Δ²y(t-1) = f(t, y(t))`, zero boundary values.
///
/// `f` and `df` take `(t, y)` with `t` the grid index. Returns the full grid
/// vector and the final residual `max_t |Δ²y(t-1) + f(t,y(t))|`.
pub fn newton_solve(
    n: usize,
    f: impl Fn(f64, f64) -> f64,
    df: impl Fn(f64, f64) -> f64,
    start: &[f64],
) -> (Vec<f64>, f64) {
    let residual = |y: &DVector<f64>| -> DVector<f64> {
        DVector::from_fn(n, |i, _| {
            let left = if i == 0 { 0.0 } else { y[i - 1] };
            let right = if i + 1 == n { 0.0 } else { y[i + 1] };
            -(right - 2.0 * y[i] + left) - f((i + 1) as f64, y[i])
        })
    };
    let mut y = DVector::from_column_slice(start);
    let mut r = residual(&y);
    for _ in 0..500 {
        let norm = r.amax();
        if norm < 1e-14 {
            break;
        }
        let jac = DMatrix::from_fn(n, n, |i, j| match i.abs_diff(j) {
            0 => 2.0 - df((i + 1) as f64, y[i]),
            1 => -1.0,
            _ => 0.0,
        });
        let step = jac.lu().solve(&r).expect("nonsingular Jacobian");
        let mut damping = 1.0;
        loop {
            let trial = &y - damping * &step;
            let rt = residual(&trial);
            if rt.iter().all(|v| v.is_finite()) && rt.amax() < norm || damping < 1e-10 {
                y = trial;
                r = rt;
                break;
            }
            damping *= 0.5;
        }
        if step.amax() * damping < 1e-16 * (1.0 + y.amax()) {
            break;
        }
    }
    let mut full = vec![0.0];
    full.extend(y.iter());
    full.push(0.0);
    (full, r.amax())
}
