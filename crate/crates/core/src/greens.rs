//! Green's kernels of the shifted Dirichlet operator below the first eigenvalue.
//!
//! For `λ < λ₁` the solution of
//!
//! ```text
//! -Δ²y(t-1) - λ y(t) = h(t),   y(0) = 0,  y(T+1) = B
//! ```
//!
//! is `y(t) = B ψ(t) - Σ_s G(t,s) h(s)`. The kernel has a closed form in three
//! regimes selected by the sign of `λ`:
//!
//! * `0 < λ < λ₁`: trigonometric, `cos θ = (2-λ)/2`;
//! * `λ < 0`: the two real roots `α > 1 > β > 0` of `m² + (λ-2)m + 1 = 0`;
//! * `λ = 0`: piecewise linear.
//!
//! Every interior kernel entry is negative, which is exactly what makes the
//! maximum principle hold.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{check_grid_size, MeshFunction};
use crate::linear::{first_eigenvalue, solve_linear, LinearProblem, SINGULAR_TOLERANCE};

/// `|λ|` below this selects the polynomial kernel.
pub const ZERO_SHIFT_TOLERANCE: f64 = 1e-12;

/// Closed-form regime of a kernel and its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "case", rename_all = "snake_case")]
pub enum KernelCase {
    /// `0 < λ < λ₁`, with `θ = arccos((2-λ)/2)`.
    Oscillatory { theta: f64 },
    /// `λ < 0`, with roots `alpha > 1 > beta`, `alpha * beta = 1`.
    Exponential { alpha: f64, beta: f64 },
    /// `λ = 0`.
    Polynomial,
}

impl KernelCase {
    pub fn name(&self) -> &'static str {
        match self {
            KernelCase::Oscillatory { .. } => "oscillatory",
            KernelCase::Exponential { .. } => "exponential",
            KernelCase::Polynomial => "polynomial",
        }
    }
}

/// Per-regime evaluation of `S(k)`, the Cauchy function `y(t,s) = S(t-s)`, which
/// solves the homogeneous equation with `S(0) = 0`, `S(1) = 1`.
#[derive(Debug, Clone, Copy)]
enum Basis {
    Oscillatory {
        theta: f64,
        sin_theta: f64,
    },
    // S(k) = α^(k-1) (1 - r^k) / (1 - r) with r = β/α = α⁻²; kept in this
    // scaled form so large T and very negative λ do not overflow
    Exponential {
        ln_alpha: f64,
        one_minus_r: f64,
    },
    Polynomial,
}

impl Basis {
    fn classify(lambda: f64) -> (Basis, KernelCase) {
        if lambda.abs() < ZERO_SHIFT_TOLERANCE {
            (Basis::Polynomial, KernelCase::Polynomial)
        } else if lambda > 0.0 {
            let theta = ((2.0 - lambda) / 2.0).acos();
            (
                Basis::Oscillatory {
                    theta,
                    sin_theta: theta.sin(),
                },
                KernelCase::Oscillatory { theta },
            )
        } else {
            // α - β = sqrt((λ-2)² - 4) = sqrt(λ(λ-4)), α - 1 = (-λ + sqrt(λ(λ-4)))/2
            let disc = (lambda * (lambda - 4.0)).sqrt();
            let alpha = ((2.0 - lambda) + disc) / 2.0;
            let beta = 1.0 / alpha;
            let ln_alpha = ((disc - lambda) / 2.0).ln_1p();
            (
                Basis::Exponential {
                    ln_alpha,
                    one_minus_r: -(-2.0 * ln_alpha).exp_m1(),
                },
                KernelCase::Exponential { alpha, beta },
            )
        }
    }

    /// `1 - r^k` for the exponential regime.
    fn tail(ln_alpha: f64, k: f64) -> f64 {
        -(-2.0 * k * ln_alpha).exp_m1()
    }

    /// `S(k)`.
    fn s(&self, k: i64) -> f64 {
        let k = k as f64;
        match *self {
            Basis::Oscillatory { theta, sin_theta } => (theta * k).sin() / sin_theta,
            Basis::Exponential {
                ln_alpha,
                one_minus_r,
            } => ((k - 1.0) * ln_alpha).exp() * Self::tail(ln_alpha, k) / one_minus_r,
            Basis::Polynomial => k,
        }
    }

    /// `-S(lo) S(n - hi) / S(n)` for `lo <= hi`, `n = T + 1`.
    fn scaled_product(&self, lo: i64, hi: i64, n: i64) -> f64 {
        match *self {
            Basis::Exponential {
                ln_alpha,
                one_minus_r,
            } => {
                // α-powers combine to α^(lo - hi - 1) <= 1/α
                let power = ((lo - hi - 1) as f64 * ln_alpha).exp();
                -power * Self::tail(ln_alpha, lo as f64) * Self::tail(ln_alpha, (n - hi) as f64)
                    / (Self::tail(ln_alpha, n as f64) * one_minus_r)
            }
            _ => -self.s(lo) * self.s(n - hi) / self.s(n),
        }
    }

    /// `ψ(t) = S(t) / S(T+1)`.
    fn psi(&self, t: i64, n: i64) -> f64 {
        match *self {
            Basis::Exponential { ln_alpha, .. } => {
                ((t - n) as f64 * ln_alpha).exp() * Self::tail(ln_alpha, t as f64)
                    / Self::tail(ln_alpha, n as f64)
            }
            _ => self.s(t) / self.s(n),
        }
    }
}

/// Dense Green's kernel `G(t,s)`, rows `t = 0..=T+1`, columns `s = 1..=T`.
#[derive(Debug, Clone, Serialize)]
pub struct GreensKernel {
    grid_size: usize,
    lambda: f64,
    case: KernelCase,
    #[serde(skip)]
    basis: Basis,
    /// Row-major `(T+2) x T`.
    #[serde(skip)]
    entries: Vec<f64>,
    #[serde(skip)]
    psi: MeshFunction,
}

/// Builds the kernel for `λ < λ₁(T)`.
pub fn build_kernel(lambda: f64, grid_size: usize) -> Result<GreensKernel> {
    check_grid_size(grid_size)?;
    check_regime(lambda, grid_size)?;
    let (basis, case) = Basis::classify(lambda);
    let n = grid_size as i64 + 1;
    let cols = grid_size;
    let mut entries = vec![0.0; (grid_size + 2) * cols];
    for t in 1..n {
        for s in 1..n {
            entries[t as usize * cols + (s - 1) as usize] = kernel_entry(&basis, t, s, n);
        }
    }
    let psi = MeshFunction::from_fn(grid_size, |t| basis.psi(t as i64, n))?;
    Ok(GreensKernel {
        grid_size,
        lambda,
        case,
        basis,
        entries,
        psi,
    })
}

fn kernel_entry(basis: &Basis, t: i64, s: i64, n: i64) -> f64 {
    match basis {
        // t <= s:  t (s - (T+1)) / (T+1);   s <= t:  s (t - (T+1)) / (T+1)
        Basis::Polynomial => {
            let nf = n as f64;
            if t <= s {
                t as f64 * (s as f64 - nf) / nf
            } else {
                s as f64 * (t as f64 - nf) / nf
            }
        }
        // u(t,s) = -S(T+1-s) S(t) / S(T+1), plus the Cauchy function S(t-s) below the diagonal
        Basis::Oscillatory { .. } => {
            let u = -basis.s(n - s) * basis.s(t) / basis.s(n);
            if t <= s {
                u
            } else {
                u + basis.s(t - s)
            }
        }
        // same construction; below the diagonal u + S(t-s) is summed in closed
        // form as -S(s) S(T+1-t) / S(T+1), since the two terms cancel to many digits
        Basis::Exponential { .. } => {
            if t <= s {
                basis.scaled_product(t, s, n)
            } else {
                basis.scaled_product(s, t, n)
            }
        }
    }
}

fn check_regime(lambda: f64, grid_size: usize) -> Result<()> {
    let lambda1 = first_eigenvalue(grid_size)?;
    if !lambda.is_finite() || lambda >= lambda1 - SINGULAR_TOLERANCE {
        return Err(Error::OutOfRegime { lambda, lambda1 });
    }
    Ok(())
}

impl GreensKernel {
    pub fn grid_size(&self) -> usize {
        self.grid_size
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn case(&self) -> KernelCase {
        self.case
    }

    /// `G(t,s)` for `0 <= t <= T+1`, `1 <= s <= T`.
    pub fn get(&self, t: usize, s: usize) -> f64 {
        assert!(t <= self.grid_size + 1 && (1..=self.grid_size).contains(&s));
        self.entries[t * self.grid_size + s - 1]
    }

    /// Checked variant of [`GreensKernel::get`].
    pub fn entry(&self, t: i64, s: i64) -> Result<f64> {
        let n = self.grid_size as i64;
        if !(0..=n + 1).contains(&t) {
            return Err(Error::IndexOutOfRange { index: t, min: 0, max: n + 1 });
        }
        if !(1..=n).contains(&s) {
            return Err(Error::IndexOutOfRange { index: s, min: 1, max: n });
        }
        Ok(self.get(t as usize, s as usize))
    }

    /// Rows `t = 0..=T+1` of the kernel.
    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.entries.chunks(self.grid_size)
    }

    /// Column `s` as a mesh function over `t`.
    pub fn column(&self, s: usize) -> MeshFunction {
        MeshFunction::new((0..self.grid_size + 2).map(|t| self.get(t, s)).collect())
            .expect("kernel entries are finite")
    }

    /// The homogeneous factor this kernel pairs with.
    pub fn psi(&self) -> &MeshFunction {
        &self.psi
    }

    /// Cauchy function `y(t,s) = S(t-s)`: solves the homogeneous equation in `t`
    /// with `y(s,s) = 0`, `y(s+1,s) = 1`.
    pub fn cauchy(&self, t: i64, s: i64) -> f64 {
        self.basis.s(t - s)
    }
}

/// `ψ` with `ψ(0) = 0`, `ψ(T+1) = 1` solving the homogeneous shifted equation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HomogeneousFactor {
    pub lambda: f64,
    pub psi: MeshFunction,
}

/// Homogeneous factor for `λ < λ₁`; `ψ(t) = t/(T+1)` when `λ = 0`.
pub fn homogeneous_factor(lambda: f64, grid_size: usize) -> Result<HomogeneousFactor> {
    check_grid_size(grid_size)?;
    check_regime(lambda, grid_size)?;
    let (basis, _) = Basis::classify(lambda);
    let n = grid_size as i64 + 1;
    let psi = MeshFunction::from_fn(grid_size, |t| basis.psi(t as i64, n))?;
    Ok(HomogeneousFactor { lambda, psi })
}

/// `y(t) = B ψ(t) - Σ_s G(t,s) h(s)`, boundary entries set to `0` and `B`.
pub fn solve_via_green(kernel: &GreensKernel, h: &MeshFunction, b: f64) -> Result<MeshFunction> {
    if h.grid_size() != kernel.grid_size {
        return Err(Error::GridMismatch {
            expected: kernel.grid_size,
            found: h.grid_size(),
        });
    }
    let n = kernel.grid_size;
    let forcing = h.interior();
    let mut y = vec![0.0; n + 2];
    for (t, slot) in y.iter_mut().enumerate().take(n + 1).skip(1) {
        let row = &kernel.entries[t * n..(t + 1) * n];
        let sum: f64 = row.iter().zip(forcing).map(|(g, h)| g * h).sum();
        *slot = b * kernel.psi[t] - sum;
    }
    y[n + 1] = b;
    MeshFunction::new(y)
}

/// Outcome of [`verify_negativity`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NegativityReport {
    pub passed: bool,
    /// Largest (least negative) interior entry.
    pub max_interior: f64,
    /// Interior `(t, s)` with `G(t,s) >= 0`.
    pub violations: Vec<(usize, usize)>,
}

/// Scans all interior entries for `G(t,s) < 0`.
pub fn verify_negativity(kernel: &GreensKernel) -> NegativityReport {
    let mut max_interior = f64::NEG_INFINITY;
    let mut violations = Vec::new();
    for t in 1..=kernel.grid_size {
        for s in 1..=kernel.grid_size {
            let g = kernel.get(t, s);
            max_interior = max_interior.max(g);
            if !(g < 0.0) {
                violations.push((t, s));
            }
        }
    }
    NegativityReport {
        passed: violations.is_empty(),
        max_interior,
        violations,
    }
}

/// Largest `|G(t,s) - G(s,t)|` over interior pairs.
pub fn symmetry_defect(kernel: &GreensKernel) -> f64 {
    let n = kernel.grid_size;
    let mut worst = 0.0_f64;
    for t in 1..=n {
        for s in 1..t {
            worst = worst.max((kernel.get(t, s) - kernel.get(s, t)).abs());
        }
    }
    worst
}

/// Largest `|Δ²G(t-1,s) + λG(t,s) - δ_{ts}|` over all interior `t, s`, together
/// with the largest boundary entry magnitude `|G(0,s)|`, `|G(T+1,s)|`.
pub fn impulse_residual(kernel: &GreensKernel) -> f64 {
    let n = kernel.grid_size;
    let mut worst = 0.0_f64;
    for s in 1..=n {
        let col = kernel.column(s);
        worst = worst.max(col.left().abs()).max(col.right().abs());
        for t in 1..=n {
            let delta = if t == s { 1.0 } else { 0.0 };
            let r = col.second_difference(t) + kernel.lambda * col[t] - delta;
            worst = worst.max(r.abs());
        }
    }
    worst
}

/// Combined kernel certification.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelCertificate {
    pub negativity: NegativityReport,
    pub symmetry_defect: f64,
    pub impulse_residual: f64,
    /// Largest `|ψ(0)|`, `|ψ(T+1) - 1|`, or homogeneous-equation defect of `ψ`.
    pub psi_defect: f64,
    pub passed: bool,
}

pub const SYMMETRY_TOLERANCE: f64 = 1e-11;
pub const IMPULSE_TOLERANCE: f64 = 1e-10;

/// Runs negativity, symmetry, impulse-response and `ψ` checks.
pub fn certify_kernel(kernel: &GreensKernel) -> KernelCertificate {
    let negativity = verify_negativity(kernel);
    let symmetry_defect = symmetry_defect(kernel);
    let impulse_residual = impulse_residual(kernel);
    let psi_defect = psi_defect(kernel.lambda, &kernel.psi);
    let passed = negativity.passed
        && symmetry_defect < SYMMETRY_TOLERANCE
        && impulse_residual < IMPULSE_TOLERANCE
        && psi_defect < IMPULSE_TOLERANCE;
    KernelCertificate {
        negativity,
        symmetry_defect,
        impulse_residual,
        psi_defect,
        passed,
    }
}

/// Largest violation of `ψ(0) = 0`, `ψ(T+1) = 1`, `Δ²ψ(t-1) + λψ(t) = 0`.
pub fn psi_defect(lambda: f64, psi: &MeshFunction) -> f64 {
    let mut worst = psi.left().abs().max((psi.right() - 1.0).abs());
    for t in 1..=psi.grid_size() {
        worst = worst.max((psi.second_difference(t) + lambda * psi[t]).abs());
    }
    worst
}

/// Outcome of [`check_maximum_principle`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaxPrincipleReport {
    pub passed: bool,
    pub trials: usize,
    /// Smallest interior value seen over all trials and both solution paths.
    pub min_value: f64,
    /// Largest sup-norm gap between the kernel and direct solutions.
    pub max_path_gap: f64,
    /// Trials where some `y(t) < -1e-12`.
    pub failures: usize,
}

/// Values at or above this count as nonnegative.
pub const NONNEGATIVITY_SLACK: f64 = 1e-12;

/// Draws `trials` random `h >= 0`, `B >= 0` (the first trial is `h ≡ 0`, `B = 0`),
/// solves by kernel and by elimination, and checks `y >= 0`.
pub fn check_maximum_principle(
    lambda: f64,
    grid_size: usize,
    trials: usize,
    seed: u64,
) -> Result<MaxPrincipleReport> {
    let kernel = build_kernel(lambda, grid_size)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min_value = f64::INFINITY;
    let mut max_path_gap = 0.0_f64;
    let mut failures = 0;
    for trial in 0..trials {
        let (h, b) = if trial == 0 {
            (MeshFunction::zeros(grid_size)?, 0.0)
        } else {
            let h = MeshFunction::from_fn(grid_size, |t| {
                if t == 0 || t == grid_size + 1 {
                    0.0
                } else {
                    rng.gen::<f64>()
                }
            })?;
            (h, rng.gen::<f64>())
        };
        let via_green = solve_via_green(&kernel, &h, b)?;
        let direct = solve_linear(&LinearProblem::new(lambda, h, b))?.y;
        max_path_gap = max_path_gap.max(via_green.sup_distance(&direct)?);
        let trial_min = via_green
            .interior()
            .iter()
            .chain(direct.interior())
            .fold(f64::INFINITY, |m, &v| m.min(v));
        min_value = min_value.min(trial_min);
        if trial_min < -NONNEGATIVITY_SLACK {
            failures += 1;
        }
    }
    Ok(MaxPrincipleReport {
        passed: failures == 0,
        trials,
        min_value,
        max_path_gap,
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn polynomial_kernel_entries() {
        let k = build_kernel(0.0, 3).unwrap();
        assert_eq!(k.case(), KernelCase::Polynomial);
        assert_abs_diff_eq!(k.get(1, 1), -0.75, epsilon = 1e-15);
        assert_abs_diff_eq!(k.get(2, 1), -0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(k.get(2, 2), -1.0, epsilon = 1e-15);
        for s in 1..=3 {
            assert_eq!(k.get(0, s), 0.0);
            assert_eq!(k.get(4, s), 0.0);
        }
    }

    #[test]
    fn impulse_column_matches_direct_solve() {
        let k = build_kernel(0.0, 3).unwrap();
        let unit = MeshFunction::from_interior(&[0.0, 1.0, 0.0], 0.0, 0.0).unwrap();
        // Δ²G(·,2) = δ  ⇔  -Δ²(-G) = δ, so -G(·,2) is the direct solve with h = e₂
        let y = solve_linear(&LinearProblem::new(0.0, unit, 0.0)).unwrap().y;
        for t in 0..5 {
            assert_abs_diff_eq!(k.get(t, 2), -y[t], epsilon = 1e-12);
        }
    }

    #[test]
    fn exponential_roots() {
        let k = build_kernel(-1.0, 3).unwrap();
        let KernelCase::Exponential { alpha, beta } = k.case() else {
            panic!("expected exponential case");
        };
        assert_abs_diff_eq!(alpha, (3.0 + 5f64.sqrt()) / 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(beta, (3.0 - 5f64.sqrt()) / 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(alpha * beta, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(alpha + beta, 3.0, epsilon = 1e-12);
    }

    #[test]
    fn oscillatory_theta() {
        let lambda = 0.3;
        let k = build_kernel(lambda, 3).unwrap();
        let KernelCase::Oscillatory { theta } = k.case() else {
            panic!("expected oscillatory case");
        };
        assert_abs_diff_eq!(2.0 - 2.0 * theta.cos(), lambda, epsilon = 1e-14);
        // the arctan form agrees on 0 < λ < 2
        let atan_form = ((4.0 - (lambda - 2.0f64).powi(2)).sqrt() / (2.0 - lambda)).atan();
        assert_abs_diff_eq!(theta, atan_form, epsilon = 1e-14);
    }

    #[test]
    fn exponential_lower_branch_equals_cauchy_construction() {
        // at small T the literal u + Cauchy sum is well conditioned
        for &lambda in &[-0.5, -1.0, -3.0] {
            let n = 6;
            let k = build_kernel(lambda, n).unwrap();
            let KernelCase::Exponential { alpha, beta } = k.case() else { unreachable!() };
            let np1 = (n + 1) as i32;
            for t in 1..=n as i32 {
                for s in 1..=n as i32 {
                    let u = (alpha.powi(np1 - s) - beta.powi(np1 - s)) / (alpha - beta)
                        * (beta.powi(t) - alpha.powi(t))
                        / (alpha.powi(np1) - beta.powi(np1));
                    let printed = if t <= s {
                        u
                    } else {
                        u + (alpha.powi(t - s) - beta.powi(t - s)) / (alpha - beta)
                    };
                    let g = k.get(t as usize, s as usize);
                    assert!((g - printed).abs() < 1e-12 * (1.0 + printed.abs()), "{t} {s} {g} {printed}");
                    if t > s {
                        let cauchy = k.cauchy(t as i64, s as i64);
                        assert!((g - (u + cauchy)).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn out_of_regime_is_rejected() {
        let lambda1 = first_eigenvalue(3).unwrap();
        for lambda in [lambda1, lambda1 + 0.1, 2.0, lambda1 - 1e-10, f64::NAN] {
            assert!(matches!(build_kernel(lambda, 3), Err(Error::OutOfRegime { .. })));
            assert!(homogeneous_factor(lambda, 3).is_err());
            assert!(check_maximum_principle(lambda, 3, 1, 0).is_err());
        }
        assert!(build_kernel(0.0, 0).is_err());
    }

    #[test]
    fn zero_classification_threshold() {
        assert_eq!(build_kernel(5e-13, 4).unwrap().case(), KernelCase::Polynomial);
        assert_eq!(build_kernel(-5e-13, 4).unwrap().case(), KernelCase::Polynomial);
        assert!(matches!(build_kernel(2e-12, 4).unwrap().case(), KernelCase::Oscillatory { .. }));
        assert!(matches!(build_kernel(-2e-12, 4).unwrap().case(), KernelCase::Exponential { .. }));
    }

    #[test]
    fn homogeneous_factor_examples() {
        let psi = homogeneous_factor(0.0, 3).unwrap().psi;
        assert_abs_diff_eq!(psi[2], 0.5, epsilon = 1e-15);
        let direct = solve_linear(&LinearProblem::new(0.0, MeshFunction::zeros(3).unwrap(), 1.0)).unwrap().y;
        assert!(psi.sup_distance(&direct).unwrap() < 1e-14);

        for lambda in [-2.0, -1.0, 0.0, 0.3] {
            assert_eq!(homogeneous_factor(lambda, 3).unwrap().psi[4], 1.0);
        }

        let alpha = (3.0 + 5f64.sqrt()) / 2.0;
        let beta = (3.0 - 5f64.sqrt()) / 2.0;
        let closed = (alpha - beta) / (alpha.powi(4) - beta.powi(4));
        // by hand: 3y1 = y2, 3y2 = y1 + y3, 3y3 = y2 + 1  =>  y1 = 1/21
        assert_abs_diff_eq!(closed, 1.0 / 21.0, epsilon = 1e-12);
        let psi = homogeneous_factor(-1.0, 3).unwrap().psi;
        assert_abs_diff_eq!(psi[1], closed, epsilon = 1e-12);
        let direct = solve_linear(&LinearProblem::new(-1.0, MeshFunction::zeros(3).unwrap(), 1.0)).unwrap().y;
        assert!(psi.sup_distance(&direct).unwrap() < 1e-10);
    }

    #[test]
    fn solve_via_green_examples() {
        let k = build_kernel(0.0, 3).unwrap();
        let zero = solve_via_green(&k, &MeshFunction::zeros(3).unwrap(), 0.0).unwrap();
        assert_eq!(zero.sup_norm(), 0.0);

        let ones = MeshFunction::from_interior(&[1.0; 3], 0.0, 0.0).unwrap();
        let y = solve_via_green(&k, &ones, 0.0).unwrap();
        for (a, b) in y.values().iter().zip([0.0, 1.5, 2.0, 1.5, 0.0]) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-14);
        }
        let direct = solve_linear(&LinearProblem::new(0.0, ones, 0.0)).unwrap().y;
        assert!(y.sup_distance(&direct).unwrap() < 1e-14);

        let lambda = 0.5 * first_eigenvalue(10).unwrap();
        let k = build_kernel(lambda, 10).unwrap();
        let h = MeshFunction::from_fn(10, |t| ((t * 37 % 11) as f64 / 5.5) - 1.0).unwrap();
        let y = solve_via_green(&k, &h, 0.3).unwrap();
        let direct = solve_linear(&LinearProblem::new(lambda, h, 0.3)).unwrap().y;
        assert!(y.sup_distance(&direct).unwrap() < 1e-10);
        assert_eq!(y.right(), 0.3);

        assert!(matches!(
            solve_via_green(&k, &MeshFunction::zeros(3).unwrap(), 0.0),
            Err(Error::GridMismatch { .. })
        ));
    }

    #[test]
    fn negativity_examples() {
        // interior entries of the λ=0, T=3 kernel: min(t,s)(max(t,s)-4)/4
        let mut expected_max = f64::NEG_INFINITY;
        for t in 1..=3i32 {
            for s in 1..=3i32 {
                let v = (t.min(s) * (t.max(s) - 4)) as f64 / 4.0;
                expected_max = expected_max.max(v);
            }
        }
        let report = verify_negativity(&build_kernel(0.0, 3).unwrap());
        assert!(report.passed);
        assert_abs_diff_eq!(report.max_interior, expected_max, epsilon = 1e-15);
        assert_abs_diff_eq!(report.max_interior, -0.25, epsilon = 1e-15);

        assert!(verify_negativity(&build_kernel(-2.0, 20).unwrap()).passed);
        let lambda = 0.9 * first_eigenvalue(5).unwrap();
        assert!(verify_negativity(&build_kernel(lambda, 5).unwrap()).passed);
    }

    #[test]
    fn maximum_principle_examples() {
        let report = check_maximum_principle(0.0, 3, 1, 0).unwrap();
        assert!(report.passed);
        assert_eq!(report.min_value, 0.0);

        let k = build_kernel(0.0, 3).unwrap();
        let ones = MeshFunction::from_interior(&[1.0; 3], 0.0, 0.0).unwrap();
        let y = solve_via_green(&k, &ones, 0.0).unwrap();
        let min = y.interior().iter().cloned().fold(f64::INFINITY, f64::min);
        assert_abs_diff_eq!(min, 1.5, epsilon = 1e-14);

        let report = check_maximum_principle(-3.0, 15, 500, 11).unwrap();
        assert!(report.passed, "{report:?}");
        assert!(report.max_path_gap < 1e-9);
    }

    #[test]
    fn large_negative_shift_stays_finite() {
        let k = build_kernel(-50.0, 150).unwrap();
        assert!(k.rows().flatten().all(|g| g.is_finite()));
        assert!(certify_kernel(&k).passed);
    }
}
