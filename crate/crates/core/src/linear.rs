//! Spectrum of the Dirichlet second-difference operator and a direct
//! tridiagonal solver for the shifted linear problem
//!
//! ```text
//! -Δ²y(t-1) - λ y(t) = h(t),  t = 1..=T,   y(0) = 0,  y(T+1) = B.
//! ```
//!
//! The solver never goes through a Green's kernel; it is the reference the
//! kernel representation is checked against.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{check_grid_size, MeshFunction};

/// `λ` closer than this to an eigenvalue is treated as singular.
pub const SINGULAR_TOLERANCE: f64 = 1e-9;

/// Boundary entries that differ from the prescribed values by more than this
/// make a residual infinite.
pub const BOUNDARY_TOLERANCE: f64 = 1e-12;

/// Relative accuracy demanded from the tridiagonal elimination.
const SOLVE_ACCURACY: f64 = 1e-10;

/// Eigenvalues `λ_n = 2 - 2cos(nπ/(T+1))`, `n = 1..=T`, in ascending order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Spectrum {
    grid_size: usize,
    eigenvalues: Vec<f64>,
}

impl Spectrum {
    pub fn grid_size(&self) -> usize {
        self.grid_size
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// The first (smallest) eigenvalue `λ₁`.
    pub fn first(&self) -> f64 {
        self.eigenvalues[0]
    }

    /// Returns `(n, λ_n)` when `lambda` lies within [`SINGULAR_TOLERANCE`] of some `λ_n`.
    pub fn nearby_eigenvalue(&self, lambda: f64) -> Option<(usize, f64)> {
        self.eigenvalues
            .iter()
            .enumerate()
            .find(|(_, &ev)| (lambda - ev).abs() < SINGULAR_TOLERANCE)
            .map(|(i, &ev)| (i + 1, ev))
    }

    pub(crate) fn check_nonsingular(&self, lambda: f64) -> Result<()> {
        match self.nearby_eigenvalue(lambda) {
            Some((n, eigenvalue)) => Err(Error::SingularOperator {
                lambda,
                n,
                eigenvalue,
                tolerance: SINGULAR_TOLERANCE,
            }),
            None => Ok(()),
        }
    }
}

/// All `T` eigenvalues of the Dirichlet problem `Δ²y(t-1) + λy(t) = 0`.
pub fn eigenvalues(grid_size: usize) -> Result<Spectrum> {
    check_grid_size(grid_size)?;
    let denom = 2.0 * (grid_size + 1) as f64;
    // 2 - 2cos(x) = 4 sin²(x/2), without the cancellation near x = 0
    let eigenvalues = (1..=grid_size)
        .map(|n| {
            let s = (n as f64 * PI / denom).sin();
            4.0 * s * s
        })
        .collect();
    Ok(Spectrum {
        grid_size,
        eigenvalues,
    })
}

/// First eigenvalue `λ₁(T) = 2 - 2cos(π/(T+1))`.
pub fn first_eigenvalue(grid_size: usize) -> Result<f64> {
    check_grid_size(grid_size)?;
    let s = (PI / (2.0 * (grid_size + 1) as f64)).sin();
    Ok(4.0 * s * s)
}

/// The forced linear boundary value problem with shift `lambda`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProblem {
    pub lambda: f64,
    /// Forcing; only the interior entries `t = 1..=T` are read.
    pub h: MeshFunction,
    /// Right boundary value `y(T+1)`.
    pub b: f64,
}

impl LinearProblem {
    pub fn new(lambda: f64, h: MeshFunction, b: f64) -> Self {
        Self { lambda, h, b }
    }

    pub fn grid_size(&self) -> usize {
        self.h.grid_size()
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LinearProblemDocument {
    #[serde(rename = "T")]
    grid_size: usize,
    lambda: f64,
    h: Vec<f64>,
    #[serde(rename = "B")]
    b: f64,
}

impl Serialize for LinearProblem {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        LinearProblemDocument {
            grid_size: self.grid_size(),
            lambda: self.lambda,
            h: self.h.interior().to_vec(),
            b: self.b,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for LinearProblem {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let doc = LinearProblemDocument::deserialize(deserializer)?;
        check_grid_size(doc.grid_size).map_err(D::Error::custom)?;
        // `h` lists either the T interior values or all T+2 grid values
        let h = if doc.h.len() == doc.grid_size {
            MeshFunction::from_interior(&doc.h, 0.0, 0.0)
        } else {
            MeshFunction::with_grid(doc.grid_size, doc.h)
        }
        .map_err(D::Error::custom)?;
        if !doc.lambda.is_finite() || !doc.b.is_finite() {
            return Err(D::Error::custom("lambda and B must be finite"));
        }
        Ok(LinearProblem::new(doc.lambda, h, doc.b))
    }
}

/// Result of [`solve_linear`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinearSolution {
    pub y: MeshFunction,
    /// `residual_linear` of `y`.
    pub residual: f64,
    /// Set when `λ >= λ₁`: the algebra holds but the maximum principle does not apply.
    pub outside_max_principle_regime: bool,
}

/// Tridiagonal matrix `tridiag(-1, 2-λ, -1)` of size `T`, ready to solve.
///
/// Elimination runs without pivoting whenever every pivot is usable, which is
/// always the case for `λ < λ₁` (the matrix is then positive definite). Above
/// `λ₁` a leading minor can vanish away from the spectrum; those shifts fall
/// back to elimination with partial pivoting.
#[derive(Debug, Clone)]
pub struct ShiftedOperator {
    lambda: f64,
    grid_size: usize,
    // pivots of the forward sweep; None selects the pivoting path
    pivots: Option<Vec<f64>>,
}

/// Pivots smaller than this fraction of `|2-λ| + 2` are treated as breakdown.
const PIVOT_FLOOR: f64 = 1e-12;

impl ShiftedOperator {
    /// Factors the operator, rejecting `λ` within [`SINGULAR_TOLERANCE`] of an eigenvalue.
    pub fn new(grid_size: usize, lambda: f64) -> Result<Self> {
        let spectrum = eigenvalues(grid_size)?;
        if !lambda.is_finite() {
            return Err(Error::InvalidParameter(format!("lambda must be finite, got {lambda}")));
        }
        spectrum.check_nonsingular(lambda)?;
        let diag = 2.0 - lambda;
        let floor = PIVOT_FLOOR * (diag.abs() + 2.0);
        let mut pivots = Vec::with_capacity(grid_size);
        for i in 0..grid_size {
            let pivot = if i == 0 { diag } else { diag - 1.0 / pivots[i - 1] };
            if pivot.abs() < floor || !pivot.is_finite() {
                return Ok(Self {
                    lambda,
                    grid_size,
                    pivots: None,
                });
            }
            pivots.push(pivot);
        }
        Ok(Self {
            lambda,
            grid_size,
            pivots: Some(pivots),
        })
    }

    pub fn grid_size(&self) -> usize {
        self.grid_size
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Whether the partial-pivoting path is in use.
    pub fn is_pivoted(&self) -> bool {
        self.pivots.is_none()
    }

    /// Solves with interior forcing `h` (length `T`) and `y(T+1) = b`.
    pub fn solve_interior(&self, h: &[f64], b: f64) -> Result<MeshFunction> {
        let n = self.grid_size;
        if h.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                found: h.len(),
            });
        }
        let mut y = vec![0.0; n + 2];
        y[1..=n].copy_from_slice(h);
        y[n] += b;
        match &self.pivots {
            Some(pivots) => {
                // forward sweep z_i = (r_i + z_{i-1}) / p_i, then x_i = z_i + x_{i+1} / p_i
                let mut prev = 0.0;
                for i in 0..n {
                    prev = (y[i + 1] + prev) / pivots[i];
                    y[i + 1] = prev;
                }
                for i in (0..n - 1).rev() {
                    y[i + 1] += y[i + 2] / pivots[i];
                }
            }
            None => pivoted_solve(2.0 - self.lambda, &mut y[1..=n])?,
        }
        y[n + 1] = b;
        MeshFunction::new(y)
    }

    pub fn solve(&self, h: &MeshFunction, b: f64) -> Result<MeshFunction> {
        if h.grid_size() != self.grid_size() {
            return Err(Error::GridMismatch {
                expected: self.grid_size(),
                found: h.grid_size(),
            });
        }
        self.solve_interior(h.interior(), b)
    }
}

/// Gaussian elimination with partial pivoting on `tridiag(-1, diag, -1) x = rhs`,
/// overwriting `rhs` with `x`.
fn pivoted_solve(diag: f64, rhs: &mut [f64]) -> Result<()> {
    let n = rhs.len();
    let breakdown = || Error::InaccurateSolve {
        residual: f64::INFINITY,
        limit: SOLVE_ACCURACY,
    };
    let sup = |row: usize| if row + 1 < n { -1.0 } else { 0.0 };
    // eliminated row i holds (d, u1, u2) in columns i, i+1, i+2
    let mut d = vec![0.0; n];
    let mut u1 = vec![0.0; n];
    let mut u2 = vec![0.0; n];
    d[0] = diag;
    u1[0] = sup(0);
    for i in 0..n.saturating_sub(1) {
        // the untouched row i+1 is (-1, diag, sup(i+1)) in columns i, i+1, i+2
        if d[i].abs() >= 1.0 {
            let m = -1.0 / d[i];
            d[i + 1] = diag - m * u1[i];
            u1[i + 1] = sup(i + 1) - m * u2[i];
            rhs[i + 1] -= m * rhs[i];
        } else {
            let (d_old, u1_old, u2_old) = (d[i], u1[i], u2[i]);
            d[i] = -1.0;
            u1[i] = diag;
            u2[i] = sup(i + 1);
            rhs.swap(i, i + 1);
            let m = -d_old;
            d[i + 1] = u1_old - m * diag;
            u1[i + 1] = u2_old - m * u2[i];
            rhs[i + 1] -= m * rhs[i];
        }
    }
    for i in (0..n).rev() {
        if d[i] == 0.0 {
            return Err(breakdown());
        }
        let mut v = rhs[i];
        if i + 1 < n {
            v -= u1[i] * rhs[i + 1];
        }
        if i + 2 < n {
            v -= u2[i] * rhs[i + 2];
        }
        rhs[i] = v / d[i];
    }
    Ok(())
}

/// Solves the linear problem directly by tridiagonal elimination.
pub fn solve_linear(p: &LinearProblem) -> Result<LinearSolution> {
    let grid_size = p.grid_size();
    let op = ShiftedOperator::new(grid_size, p.lambda)?;
    let y = op.solve(&p.h, p.b)?;
    let residual = residual_linear(p, &y);
    let scale = 1f64
        .max(p.h.interior().iter().fold(0.0_f64, |m, v| m.max(v.abs())))
        .max(p.b.abs())
        .max((4.0 + p.lambda.abs()) * y.sup_norm());
    let limit = SOLVE_ACCURACY * scale;
    if !(residual <= limit) {
        return Err(Error::InaccurateSolve { residual, limit });
    }
    Ok(LinearSolution {
        y,
        residual,
        outside_max_principle_regime: p.lambda >= first_eigenvalue(grid_size)? - SINGULAR_TOLERANCE,
    })
}

/// `max_t |-Δ²y(t-1) - λy(t) - h(t)|`, or `+∞` when `y` misses the boundary values
/// or lives on a different grid.
pub fn residual_linear(p: &LinearProblem, y: &MeshFunction) -> f64 {
    if y.grid_size() != p.grid_size() {
        return f64::INFINITY;
    }
    if y.left().abs() > BOUNDARY_TOLERANCE || (y.right() - p.b).abs() > BOUNDARY_TOLERANCE {
        return f64::INFINITY;
    }
    (1..=y.grid_size())
        .map(|t| (-y.second_difference(t) - p.lambda * y[t] - p.h[t]).abs())
        .fold(0.0, f64::max)
}
