//! Upper and lower solutions, the one-sided Lipschitz estimate, and the
//! monotone iteration
//!
//! ```text
//! -Δ²y_{n+1}(t-1) - λ y_{n+1}(t) = f(t, y_n(t)) - λ y_n(t),   y_{n+1}(0) = y_{n+1}(T+1) = 0
//! ```
//!
//! started from a lower solution `α₀` and an upper solution `β₀`. With
//! `λ <= M` (`M` a lower bound on the difference quotients of `f` over the
//! bracket) and `λ < λ₁`, the kernel of the shifted operator is negative and
//! the sequences satisfy `α₀ <= α₁ <= ... <= β₁ <= β₀`. The iteration checks
//! that chain at every step instead of assuming it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::grid::{check_grid_size, MeshFunction};
use crate::linear::{first_eigenvalue, ShiftedOperator, BOUNDARY_TOLERANCE};
use crate::problems::ProblemDocument;

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 10_000;
/// Pointwise slack in every monotonicity and ordering comparison.
pub const MONOTONICITY_SLACK: f64 = 1e-12;
/// Slack for the defect inequalities of upper and lower solutions.
pub const VALIDATION_SLACK: f64 = 1e-12;
/// Default `κ` in `λ = min(M, κ λ₁)`.
pub const DEFAULT_KAPPA: f64 = 0.9;

/// Nonlinear problem `-Δ²y(t-1) = f(t, y(t))`, `y(0) = y(T+1) = 0`, with its bracket expressions.
#[derive(Debug, Clone, PartialEq)]
pub struct NonlinearProblem {
    pub grid_size: usize,
    pub f: Expr,
    pub lower: Expr,
    pub upper: Expr,
    /// User-declared one-sided Lipschitz constant.
    pub m_declared: Option<f64>,
    /// User-fixed shift, bypassing [`choose_shift`].
    pub lambda: Option<f64>,
    pub tol: f64,
    pub max_iter: usize,
}

impl NonlinearProblem {
    pub fn new(grid_size: usize, f: Expr, lower: Expr, upper: Expr) -> Result<Self> {
        check_grid_size(grid_size)?;
        Ok(Self {
            grid_size,
            f,
            lower,
            upper,
            m_declared: None,
            lambda: None,
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
        })
    }

    pub fn from_document(doc: &ProblemDocument) -> Result<Self> {
        let parsed = doc.parse()?;
        let mut p = Self::new(doc.grid_size, parsed.f, parsed.lower, parsed.upper)?;
        p.m_declared = doc.m;
        p.lambda = doc.lambda;
        if let Some(tol) = doc.tol {
            if !(tol > 0.0 && tol.is_finite()) {
                return Err(Error::InvalidProblem(format!("tol must be positive, got {tol}")));
            }
            p.tol = tol;
        }
        if let Some(max_iter) = doc.max_iter {
            if max_iter == 0 {
                return Err(Error::InvalidProblem("max_iter must be positive".into()));
            }
            p.max_iter = max_iter;
        }
        for (name, v) in [("lambda", p.lambda), ("M", p.m_declared)] {
            if matches!(v, Some(x) if !x.is_finite()) {
                return Err(Error::InvalidProblem(format!("{name} must be finite")));
            }
        }
        Ok(p)
    }

    /// `f(t, y)` with `T` bound to the grid parameter.
    pub fn f(&self, t: usize, y: f64) -> Result<f64> {
        self.f.eval_at(t as f64, y, self.grid_size as f64)
    }

    fn sample_bracket_expr(&self, e: &Expr) -> Result<MeshFunction> {
        let n = self.grid_size as f64;
        let values = (0..self.grid_size + 2)
            .map(|t| e.eval_at(t as f64, 0.0, n))
            .collect::<Result<Vec<_>>>()?;
        MeshFunction::new(values)
    }

    /// Evaluates `lower` and `upper` on the grid.
    pub fn initial_bracket(&self) -> Result<Bracket> {
        Bracket::new(
            self.sample_bracket_expr(&self.lower)?,
            self.sample_bracket_expr(&self.upper)?,
        )
    }

    fn check_grid(&self, y: &MeshFunction) -> Result<()> {
        if y.grid_size() != self.grid_size {
            return Err(Error::GridMismatch {
                expected: self.grid_size,
                found: y.grid_size(),
            });
        }
        Ok(())
    }
}

/// Ordered pair `α <= β` with `α(0) = β(0) = 0` and `α(T+1) <= 0 <= β(T+1)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Bracket {
    alpha: MeshFunction,
    beta: MeshFunction,
}

impl Bracket {
    pub fn new(alpha: MeshFunction, beta: MeshFunction) -> Result<Self> {
        alpha.ensure_same_grid(&beta)?;
        if let Some(t) = (0..alpha.values().len()).find(|&t| alpha[t] > beta[t]) {
            return Err(Error::InvalidBracket(format!(
                "lower exceeds upper at t={t}: {} > {}",
                alpha[t], beta[t]
            )));
        }
        if alpha.left().abs() > BOUNDARY_TOLERANCE || beta.left().abs() > BOUNDARY_TOLERANCE {
            return Err(Error::InvalidBracket(format!(
                "both bracket functions must vanish at t=0 (got {} and {})",
                alpha.left(),
                beta.left()
            )));
        }
        if alpha.right() > BOUNDARY_TOLERANCE || beta.right() < -BOUNDARY_TOLERANCE {
            return Err(Error::InvalidBracket(format!(
                "need lower(T+1) <= 0 <= upper(T+1), got {} and {}",
                alpha.right(),
                beta.right()
            )));
        }
        Ok(Self { alpha, beta })
    }

    pub fn alpha(&self) -> &MeshFunction {
        &self.alpha
    }

    pub fn beta(&self) -> &MeshFunction {
        &self.beta
    }

    pub fn grid_size(&self) -> usize {
        self.alpha.grid_size()
    }

    pub fn is_degenerate(&self) -> bool {
        self.alpha == self.beta
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolutionKind {
    Upper,
    Lower,
}

/// Result of checking the defect inequality of an upper or lower solution.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub kind: SolutionKind,
    pub passed: bool,
    /// Smallest slack over `t = 1..=T`: `-Δ²β(t-1) - f(t,β(t))` for upper
    /// solutions, `f(t,α(t)) + Δ²α(t-1)` for lower solutions.
    pub min_slack: f64,
    /// Grid point where `min_slack` occurs.
    pub location: usize,
    pub boundary_ok: bool,
}

fn validate(p: &NonlinearProblem, y: &MeshFunction, kind: SolutionKind) -> Result<ValidationReport> {
    p.check_grid(y)?;
    let mut min_slack = f64::INFINITY;
    let mut location = 1;
    for t in 1..=p.grid_size {
        let defect = -y.second_difference(t) - p.f(t, y[t])?;
        let slack = match kind {
            SolutionKind::Upper => defect,
            SolutionKind::Lower => -defect,
        };
        if slack < min_slack {
            min_slack = slack;
            location = t;
        }
    }
    let right_ok = match kind {
        SolutionKind::Upper => y.right() >= -VALIDATION_SLACK,
        SolutionKind::Lower => y.right() <= VALIDATION_SLACK,
    };
    let boundary_ok = y.left().abs() <= BOUNDARY_TOLERANCE && right_ok;
    Ok(ValidationReport {
        kind,
        passed: boundary_ok && min_slack >= -VALIDATION_SLACK,
        min_slack,
        location,
        boundary_ok,
    })
}

/// Checks `-Δ²β(t-1) >= f(t, β(t))`, `β(0) = 0`, `β(T+1) >= 0`.
pub fn is_upper_solution(p: &NonlinearProblem, beta0: &MeshFunction) -> Result<ValidationReport> {
    validate(p, beta0, SolutionKind::Upper)
}

/// Checks `-Δ²α(t-1) <= f(t, α(t))`, `α(0) = 0`, `α(T+1) <= 0`.
pub fn is_lower_solution(p: &NonlinearProblem, alpha0: &MeshFunction) -> Result<ValidationReport> {
    validate(p, alpha0, SolutionKind::Lower)
}

/// Sampling plan for [`estimate_one_sided_lipschitz`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct LipschitzSampling {
    /// Evenly spaced points per node, endpoints included; all pairs are used,
    /// plus one short pair of width [`NEAR_PAIR_GAP`] at each point.
    pub samples_per_node: usize,
    /// Extra uniformly drawn pairs per node.
    pub random_pairs: usize,
    pub seed: u64,
}

impl Default for LipschitzSampling {
    fn default() -> Self {
        Self {
            samples_per_node: 64,
            random_pairs: 64,
            seed: 0,
        }
    }
}

/// Width of the short pairs, relative to the node's bracket width.
pub const NEAR_PAIR_GAP: f64 = 1e-7;

/// Smallest sampled difference quotient and where it was found.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LipschitzEstimate {
    /// `+∞` when every node of the bracket is degenerate.
    pub value: f64,
    pub node: Option<usize>,
    pub pair: Option<(f64, f64)>,
}

/// `M̂ = min (f(t,w) - f(t,y)) / (w - y)` over sampled `y < w` in `[α(t), β(t)]`.
///
/// This bounds the best one-sided Lipschitz constant from above; it is an
/// estimate, not a certificate. The value may be negative.
pub fn estimate_one_sided_lipschitz(
    p: &NonlinearProblem,
    bracket: &Bracket,
    sampling: &LipschitzSampling,
) -> Result<LipschitzEstimate> {
    if sampling.samples_per_node < 2 {
        return Err(Error::InvalidParameter("samples_per_node must be at least 2".into()));
    }
    p.check_grid(bracket.alpha())?;
    let mut rng = ChaCha8Rng::seed_from_u64(sampling.seed);
    let mut best = LipschitzEstimate {
        value: f64::INFINITY,
        node: None,
        pair: None,
    };
    let mut consider = |t: usize, y: f64, fy: f64, w: f64, fw: f64| {
        if w > y {
            let q = (fw - fy) / (w - y);
            if q < best.value {
                best = LipschitzEstimate {
                    value: q,
                    node: Some(t),
                    pair: Some((y, w)),
                };
            }
        }
    };
    let k = sampling.samples_per_node;
    let mut ys = Vec::with_capacity(k);
    let mut fs = Vec::with_capacity(k);
    for t in 1..=p.grid_size {
        let (lo, hi) = (bracket.alpha()[t], bracket.beta()[t]);
        if !(hi > lo) {
            continue;
        }
        ys.clear();
        fs.clear();
        for i in 0..k {
            let y = if i == k - 1 {
                hi
            } else {
                lo + (hi - lo) * i as f64 / (k - 1) as f64
            };
            ys.push(y);
            fs.push(p.f(t, y)?);
        }
        for i in 0..k {
            for j in i + 1..k {
                consider(t, ys[i], fs[i], ys[j], fs[j]);
            }
        }
        // short pairs at every sample resolve the local slope, which the
        // coarse pairs miss where f' varies fast (e.g. e^y near the top)
        let gap = NEAR_PAIR_GAP * (hi - lo);
        for i in 0..k {
            let (y, w) = if i == k - 1 { (hi - gap, hi) } else { (ys[i], ys[i] + gap) };
            if w > y {
                let (fy, fw) = if i == k - 1 { (p.f(t, y)?, fs[i]) } else { (fs[i], p.f(t, w)?) };
                consider(t, y, fy, w, fw);
            }
        }
        for _ in 0..sampling.random_pairs {
            let a = rng.gen_range(lo..=hi);
            let b = rng.gen_range(lo..=hi);
            let (y, w) = if a <= b { (a, b) } else { (b, a) };
            if w > y {
                consider(t, y, p.f(t, y)?, w, p.f(t, w)?);
            }
        }
    }
    Ok(best)
}

/// `λ = min(M, κ λ₁(T))`, so that `λ <= M` and `λ < λ₁`.
pub fn choose_shift(m: f64, grid_size: usize, kappa: f64) -> Result<f64> {
    if !(kappa > 0.0 && kappa < 1.0) {
        return Err(Error::InvalidParameter(format!("kappa must lie in (0, 1), got {kappa}")));
    }
    if m.is_nan() {
        return Err(Error::InvalidParameter("M is NaN".into()));
    }
    Ok(m.min(kappa * first_eigenvalue(grid_size)?))
}

/// `max_t |Δ²y(t-1) + f(t, y(t))|`, or `+∞` if a boundary value is nonzero.
pub fn residual_nonlinear(p: &NonlinearProblem, y: &MeshFunction) -> Result<f64> {
    p.check_grid(y)?;
    if y.left().abs() > BOUNDARY_TOLERANCE || y.right().abs() > BOUNDARY_TOLERANCE {
        return Ok(f64::INFINITY);
    }
    let mut worst = 0.0_f64;
    for t in 1..=p.grid_size {
        worst = worst.max((y.second_difference(t) + p.f(t, y[t])?).abs());
    }
    Ok(worst)
}

/// One step of the scheme: solves the shifted problem with `h = f(t, y) - λy`
/// and zero boundary values.
pub fn iteration_step(p: &NonlinearProblem, op: &ShiftedOperator, y: &MeshFunction) -> Result<MeshFunction> {
    p.check_grid(y)?;
    let lambda = op.lambda();
    let h = (1..=p.grid_size)
        .map(|t| Ok(p.f(t, y[t])? - lambda * y[t]))
        .collect::<Result<Vec<_>>>()?;
    op.solve_interior(&h, 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    /// `β_{n+1} > β_n`.
    UpperIncreased,
    /// `α_{n+1} < α_n`.
    LowerDecreased,
    /// `α_{n+1} > β_{n+1}`.
    Crossed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Outcome {
    Converged,
    MaxIterExceeded,
    MonotonicityViolated {
        /// Index of the offending iterate.
        n: usize,
        kind: ViolationKind,
        t: usize,
        amount: f64,
    },
}

/// One recorded pair of iterates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterateRecord {
    pub n: usize,
    pub alpha: MeshFunction,
    pub beta: MeshFunction,
    /// `‖α_n - α_{n-1}‖∞`; absent for `n = 0`.
    pub step_alpha: Option<f64>,
    pub step_beta: Option<f64>,
    pub residual_alpha: f64,
    pub residual_beta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationTrace {
    pub lambda_used: f64,
    pub iterates: Vec<IterateRecord>,
    pub outcome: Outcome,
}

impl IterationTrace {
    /// Number of steps taken (records after the initial pair).
    pub fn steps(&self) -> usize {
        self.iterates.len().saturating_sub(1)
    }

    pub fn last(&self) -> &IterateRecord {
        self.iterates.last().expect("trace holds the initial bracket")
    }

    /// Largest violation of `α_n <= α_{n+1} <= β_{n+1} <= β_n` over the trace;
    /// `<= 0` means the chain holds exactly.
    pub fn worst_chain_violation(&self) -> f64 {
        let mut worst = f64::NEG_INFINITY;
        for pair in self.iterates.windows(2) {
            let (prev, next) = (&pair[0], &pair[1]);
            for t in 0..prev.alpha.values().len() {
                worst = worst
                    .max(prev.alpha[t] - next.alpha[t])
                    .max(next.alpha[t] - next.beta[t])
                    .max(next.beta[t] - prev.beta[t]);
            }
        }
        worst
    }

    /// Writes `iter,t,alpha,beta,step_alpha,step_beta,residual_alpha,residual_beta`.
    pub fn to_csv(&self) -> String {
        use std::fmt::Write as _;
        let opt = |v: Option<f64>| v.map(|x| format!("{x:?}")).unwrap_or_default();
        let mut out = String::from("iter,t,alpha,beta,step_alpha,step_beta,residual_alpha,residual_beta\n");
        for rec in &self.iterates {
            for t in 0..rec.alpha.values().len() {
                let _ = writeln!(
                    out,
                    "{},{},{:?},{:?},{},{},{:?},{:?}",
                    rec.n,
                    t,
                    rec.alpha[t],
                    rec.beta[t],
                    opt(rec.step_alpha),
                    opt(rec.step_beta),
                    rec.residual_alpha,
                    rec.residual_beta
                );
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationResult {
    /// `α̃`, the last lower iterate.
    pub alpha_limit: MeshFunction,
    /// `β̃`, the last upper iterate.
    pub beta_limit: MeshFunction,
    pub trace: IterationTrace,
}

impl IterationResult {
    pub fn converged(&self) -> bool {
        self.trace.outcome == Outcome::Converged
    }
}

/// First `t` with `lower(t) > upper(t) + slack`, and the excess.
fn first_violation(lower: &MeshFunction, upper: &MeshFunction) -> Option<(usize, f64)> {
    lower
        .values()
        .iter()
        .zip(upper.values())
        .enumerate()
        .find(|(_, (l, u))| **l > **u + MONOTONICITY_SLACK)
        .map(|(t, (l, u))| (t, l - u))
}

/// Runs both sequences from the bracket with shift `lambda`.
///
/// Stops when both sup-norm steps are below `tol` and both iterates have
/// nonlinear residual below `10 tol`. A broken monotonicity chain ends the
/// run with [`Outcome::MonotonicityViolated`].
pub fn monotone_iterate(p: &NonlinearProblem, bracket: &Bracket, lambda: f64) -> Result<IterationResult> {
    p.check_grid(bracket.alpha())?;
    let lambda1 = first_eigenvalue(p.grid_size)?;
    if !lambda.is_finite() || lambda >= lambda1 {
        return Err(Error::OutOfRegime { lambda, lambda1 });
    }
    let op = ShiftedOperator::new(p.grid_size, lambda)?;
    let tol = p.tol;
    let residual_limit = 10.0 * tol;

    let mut alpha = bracket.alpha().clone();
    let mut beta = bracket.beta().clone();
    let mut iterates = vec![IterateRecord {
        n: 0,
        alpha: alpha.clone(),
        beta: beta.clone(),
        step_alpha: None,
        step_beta: None,
        residual_alpha: residual_nonlinear(p, &alpha)?,
        residual_beta: residual_nonlinear(p, &beta)?,
    }];

    if bracket.is_degenerate() {
        let residual = iterates[0].residual_alpha;
        if !(residual < residual_limit) {
            return Err(Error::InvalidBracket(format!(
                "degenerate bracket is not a solution (residual {residual:e})"
            )));
        }
        return Ok(IterationResult {
            alpha_limit: alpha,
            beta_limit: beta,
            trace: IterationTrace {
                lambda_used: lambda,
                iterates,
                outcome: Outcome::Converged,
            },
        });
    }

    let mut outcome = Outcome::MaxIterExceeded;
    for n in 1..=p.max_iter {
        let next_alpha = iteration_step(p, &op, &alpha)?;
        let next_beta = iteration_step(p, &op, &beta)?;
        let record = IterateRecord {
            n,
            step_alpha: Some(next_alpha.sup_distance(&alpha)?),
            step_beta: Some(next_beta.sup_distance(&beta)?),
            residual_alpha: residual_nonlinear(p, &next_alpha)?,
            residual_beta: residual_nonlinear(p, &next_beta)?,
            alpha: next_alpha,
            beta: next_beta,
        };

        let violation = [
            (&record.beta, &beta, ViolationKind::UpperIncreased),
            (&alpha, &record.alpha, ViolationKind::LowerDecreased),
            (&record.alpha, &record.beta, ViolationKind::Crossed),
        ]
        .into_iter()
        .find_map(|(lo, hi, kind)| first_violation(lo, hi).map(|(t, amount)| (kind, t, amount)));

        alpha = record.alpha.clone();
        beta = record.beta.clone();
        let done = record.step_alpha.unwrap_or(f64::INFINITY) < tol
            && record.step_beta.unwrap_or(f64::INFINITY) < tol
            && record.residual_alpha < residual_limit
            && record.residual_beta < residual_limit;
        iterates.push(record);

        if let Some((kind, t, amount)) = violation {
            outcome = Outcome::MonotonicityViolated { n, kind, t, amount };
            break;
        }
        if done {
            outcome = Outcome::Converged;
            break;
        }
    }

    Ok(IterationResult {
        alpha_limit: alpha,
        beta_limit: beta,
        trace: IterationTrace {
            lambda_used: lambda,
            iterates,
            outcome,
        },
    })
}

/// Uniqueness evidence, with the hypothesis and the empirical gap kept apart.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UniquenessVerdict {
    /// `M̂` is finite and `M̂ < λ₁`.
    pub theorem_hypothesis_holds: bool,
    /// `‖α̃ - β̃‖∞ < 10 tol` for a converged run.
    pub empirically_unique: bool,
    pub gap: f64,
    pub m_hat: f64,
    pub lambda1: f64,
}

pub fn check_uniqueness(
    p: &NonlinearProblem,
    bracket: &Bracket,
    result: &IterationResult,
    m_hat: f64,
) -> Result<UniquenessVerdict> {
    p.check_grid(bracket.alpha())?;
    let lambda1 = first_eigenvalue(p.grid_size)?;
    let gap = result.alpha_limit.sup_distance(&result.beta_limit)?;
    Ok(UniquenessVerdict {
        theorem_hypothesis_holds: m_hat.is_finite() && m_hat < lambda1,
        empirically_unique: result.converged() && gap < 10.0 * p.tol,
        gap,
        m_hat,
        lambda1,
    })
}
