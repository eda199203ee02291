//! The `solve` and `verify` pipelines and their JSON report.

use std::time::Instant;

use serde::Serialize;

use dbvp_core::greens::{build_kernel, verify_negativity, KernelCase};
use dbvp_core::monotone::{
    choose_shift, estimate_one_sided_lipschitz, is_lower_solution, is_upper_solution, monotone_iterate,
    Bracket, IterationResult, LipschitzSampling, NonlinearProblem, Outcome, ValidationReport, DEFAULT_KAPPA,
};
use dbvp_core::{check_uniqueness, first_eigenvalue, Error, MeshFunction, ProblemDocument, UniquenessVerdict};

use crate::{exit, exit_code_for};

/// Pipeline stage, recorded when a run stops early.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Parse,
    Spectrum,
    BracketValidation,
    Lipschitz,
    ChooseShift,
    Kernel,
    Iteration,
    Uniqueness,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    /// `solve` finished with both sequences converged.
    Converged,
    /// `verify` found a valid bracket.
    Validated,
    HypothesisFailure,
    MaxIterExceeded,
    NumericalFailure,
    BadInput,
}

impl RunStatus {
    pub fn exit_code(self) -> u8 {
        match self {
            RunStatus::Converged | RunStatus::Validated => exit::OK,
            RunStatus::HypothesisFailure => exit::HYPOTHESIS,
            RunStatus::MaxIterExceeded | RunStatus::NumericalFailure => exit::NON_CONVERGENCE,
            RunStatus::BadInput => exit::BAD_INPUT,
        }
    }

    fn from_error(err: &Error) -> Self {
        match exit_code_for(err) {
            exit::HYPOTHESIS => RunStatus::HypothesisFailure,
            exit::NON_CONVERGENCE => RunStatus::NumericalFailure,
            _ => RunStatus::BadInput,
        }
    }
}

/// Flag overrides applied on top of the problem document.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolveOptions {
    pub lambda: Option<f64>,
    pub m: Option<f64>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    /// Seed for the random pairs of the `M̂` estimate.
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumSummary {
    #[serde(rename = "T")]
    pub grid_size: usize,
    pub lambda1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BracketSummary {
    pub lower: ValidationReport,
    pub upper: ValidationReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LipschitzSummary {
    /// Sampled one-sided Lipschitz estimate.
    pub m_hat: f64,
    pub node: Option<usize>,
    pub pair: Option<(f64, f64)>,
    pub seed: u64,
    /// `M` from the document or `--M`, if any.
    pub m_declared: Option<f64>,
    /// The `M` fed to the shift rule.
    pub m_used: f64,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelSummary {
    pub case: KernelCase,
    pub max_interior: f64,
    pub negative: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceSummary {
    pub outcome: Outcome,
    pub iterations: usize,
    pub final_step_alpha: Option<f64>,
    pub final_step_beta: Option<f64>,
    pub final_residual_alpha: f64,
    pub final_residual_beta: f64,
    pub worst_chain_violation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Limits {
    pub alpha: MeshFunction,
    pub beta: MeshFunction,
}

/// Report of one `solve` or `verify` run.
///
/// Every field is serialized; stages that did not run are `null` and
/// `failed_stage` names the stage that stopped the run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub source: String,
    pub problem: ProblemDocument,
    pub status: RunStatus,
    pub failed_stage: Option<Stage>,
    pub error: Option<String>,
    pub spectrum: Option<SpectrumSummary>,
    pub bracket: Option<BracketSummary>,
    pub lipschitz: Option<LipschitzSummary>,
    pub lambda_used: Option<f64>,
    pub kernel: Option<KernelSummary>,
    pub trace: Option<TraceSummary>,
    pub limits: Option<Limits>,
    pub uniqueness: Option<UniquenessVerdict>,
    pub timing_ms: f64,
}

impl RunReport {
    fn new(source: &str, problem: ProblemDocument) -> Self {
        Self {
            source: source.to_string(),
            problem,
            status: RunStatus::BadInput,
            failed_stage: None,
            error: None,
            spectrum: None,
            bracket: None,
            lipschitz: None,
            lambda_used: None,
            kernel: None,
            trace: None,
            limits: None,
            uniqueness: None,
            timing_ms: 0.0,
        }
    }

    pub fn exit_code(&self) -> u8 {
        self.status.exit_code()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// JSON with `timing_ms` zeroed, for reproducibility comparisons.
    pub fn to_json_untimed(&self) -> String {
        let mut copy = self.clone();
        copy.timing_ms = 0.0;
        copy.to_json()
    }

    fn fail(&mut self, stage: Stage, status: RunStatus, message: String) {
        self.failed_stage = Some(stage);
        self.status = status;
        self.error = Some(message);
    }
}

/// A finished `solve`: the report plus the full iteration result, if any.
#[derive(Debug, Clone)]
pub struct SolveRun {
    pub report: RunReport,
    pub result: Option<IterationResult>,
}

fn apply_options(mut doc: ProblemDocument, opts: &SolveOptions) -> ProblemDocument {
    doc.lambda = opts.lambda.or(doc.lambda);
    doc.m = opts.m.or(doc.m);
    doc.tol = opts.tol.or(doc.tol);
    doc.max_iter = opts.max_iter.or(doc.max_iter);
    doc
}

struct Prepared {
    problem: NonlinearProblem,
    bracket: Bracket,
    m_hat: f64,
    lambda: f64,
}

/// Stages shared by `solve` and `verify`: parse → spectrum → bracket → `M̂` → shift → kernel.
fn prepare(report: &mut RunReport, seed: u64) -> Option<Prepared> {
    macro_rules! stage {
        ($stage:expr, $e:expr) => {
            match $e {
                Ok(v) => v,
                Err(err) => {
                    report.fail($stage, RunStatus::from_error(&err), err.to_string());
                    return None;
                }
            }
        };
    }

    let problem = stage!(Stage::Parse, NonlinearProblem::from_document(&report.problem));
    let lambda1 = stage!(Stage::Spectrum, first_eigenvalue(problem.grid_size));
    report.spectrum = Some(SpectrumSummary {
        grid_size: problem.grid_size,
        lambda1,
    });

    let bracket = stage!(Stage::BracketValidation, problem.initial_bracket());
    let lower = stage!(Stage::BracketValidation, is_lower_solution(&problem, bracket.alpha()));
    let upper = stage!(Stage::BracketValidation, is_upper_solution(&problem, bracket.beta()));
    let valid = lower.passed && upper.passed;
    let message = (!valid).then(|| {
        let bad: Vec<String> = [&lower, &upper]
            .into_iter()
            .filter(|r| !r.passed)
            .map(|r| format!("{:?} solution fails at t={} (slack {:e})", r.kind, r.location, r.min_slack))
            .collect();
        bad.join("; ")
    });
    report.bracket = Some(BracketSummary { lower, upper });
    if let Some(message) = message {
        report.fail(Stage::BracketValidation, RunStatus::HypothesisFailure, message);
        return None;
    }

    let sampling = LipschitzSampling {
        seed,
        ..LipschitzSampling::default()
    };
    let estimate = stage!(Stage::Lipschitz, estimate_one_sided_lipschitz(&problem, &bracket, &sampling));
    let mut notes = Vec::new();
    let m_used = match problem.m_declared {
        Some(m) => {
            if estimate.value < m {
                notes.push(format!(
                    "declared M = {m:e} exceeds the sampled M̂ = {:e}; the declared value is used, and a \
                     monotonicity violation would indicate it is not a valid lower bound",
                    estimate.value
                ));
            }
            m
        }
        None => estimate.value,
    };
    if m_used < 0.0 {
        notes.push("M is negative: the shift is negative and convergence may be slow".into());
    }

    let lambda = match problem.lambda {
        Some(l) => {
            if l > m_used {
                notes.push(format!("explicit lambda = {l:e} exceeds M = {m_used:e}"));
            }
            l
        }
        None => stage!(Stage::ChooseShift, choose_shift(m_used, problem.grid_size, DEFAULT_KAPPA)),
    };
    report.lipschitz = Some(LipschitzSummary {
        m_hat: estimate.value,
        node: estimate.node,
        pair: estimate.pair,
        seed,
        m_declared: problem.m_declared,
        m_used,
        notes,
    });
    report.lambda_used = Some(lambda);

    let kernel = stage!(Stage::Kernel, build_kernel(lambda, problem.grid_size));
    let negativity = verify_negativity(&kernel);
    report.kernel = Some(KernelSummary {
        case: kernel.case(),
        max_interior: negativity.max_interior,
        negative: negativity.passed,
    });
    if !negativity.passed {
        report.fail(
            Stage::Kernel,
            RunStatus::HypothesisFailure,
            format!("Green's kernel has {} nonnegative interior entries", negativity.violations.len()),
        );
        return None;
    }

    Some(Prepared {
        problem,
        bracket,
        m_hat: estimate.value,
        lambda,
    })
}

/// Bracket validation, `M̂` and shift selection without iterating.
pub fn run_verify(doc: ProblemDocument, source: &str, opts: &SolveOptions) -> RunReport {
    let start = Instant::now();
    let mut report = RunReport::new(source, apply_options(doc, opts));
    if prepare(&mut report, opts.seed).is_some() {
        report.status = RunStatus::Validated;
    }
    report.timing_ms = start.elapsed().as_secs_f64() * 1e3;
    report
}

/// The full pipeline: parse → spectrum → bracket validation → `M̂` → shift →
/// monotone iteration → uniqueness.
pub fn run_solve(doc: ProblemDocument, source: &str, opts: &SolveOptions) -> SolveRun {
    let start = Instant::now();
    let mut report = RunReport::new(source, apply_options(doc, opts));
    let mut result = None;
    if let Some(prep) = prepare(&mut report, opts.seed) {
        match monotone_iterate(&prep.problem, &prep.bracket, prep.lambda) {
            Err(err) => report.fail(Stage::Iteration, RunStatus::from_error(&err), err.to_string()),
            Ok(res) => {
                let trace = &res.trace;
                let last = trace.last();
                report.trace = Some(TraceSummary {
                    outcome: trace.outcome,
                    iterations: trace.steps(),
                    final_step_alpha: last.step_alpha,
                    final_step_beta: last.step_beta,
                    final_residual_alpha: last.residual_alpha,
                    final_residual_beta: last.residual_beta,
                    worst_chain_violation: trace.worst_chain_violation(),
                });
                report.limits = Some(Limits {
                    alpha: res.alpha_limit.clone(),
                    beta: res.beta_limit.clone(),
                });
                match trace.outcome {
                    Outcome::Converged => {
                        match check_uniqueness(&prep.problem, &prep.bracket, &res, prep.m_hat) {
                            Ok(verdict) => {
                                report.uniqueness = Some(verdict);
                                report.status = RunStatus::Converged;
                            }
                            Err(err) => {
                                report.fail(Stage::Uniqueness, RunStatus::from_error(&err), err.to_string())
                            }
                        }
                    }
                    Outcome::MaxIterExceeded => report.fail(
                        Stage::Iteration,
                        RunStatus::MaxIterExceeded,
                        format!("no convergence within {} iterations", prep.problem.max_iter),
                    ),
                    Outcome::MonotonicityViolated { n, kind, t, amount } => report.fail(
                        Stage::Iteration,
                        RunStatus::HypothesisFailure,
                        format!("monotonicity violated at iterate {n}, t={t}: {kind:?} by {amount:e}"),
                    ),
                }
                result = Some(res);
            }
        }
    }
    report.timing_ms = start.elapsed().as_secs_f64() * 1e3;
    SolveRun { report, result }
}
