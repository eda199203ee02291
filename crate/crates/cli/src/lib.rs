//! Run orchestration and artifact emission for the `dbvp` command.
//!
//! Every subcommand is a plain function returning its output and an exit
//! code, so the binary stays a thin argument parser and the same runs can be
//! driven from tests.

// `!(a < b)` is used on purpose so that NaN fails the check
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod plot;
pub mod report;

use std::fmt;
use std::path::Path;

use dbvp_core::{builtin, Error, ProblemDocument};

pub use report::{run_solve, run_verify, RunReport, RunStatus, SolveOptions, SolveRun, Stage};

/// Process exit codes.
pub mod exit {
    pub const OK: u8 = 0;
    /// Bad bracket, monotonicity violation, shift outside the regime, failed certificate.
    pub const HYPOTHESIS: u8 = 2;
    /// `max_iter` reached, or a linear solve lost accuracy.
    pub const NON_CONVERGENCE: u8 = 3;
    /// Malformed documents, flags or expressions; singular shifts.
    pub const BAD_INPUT: u8 = 4;
}

/// Exit code for a library error.
pub fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::OutOfRegime { .. } | Error::InvalidBracket(_) => exit::HYPOTHESIS,
        Error::InaccurateSolve { .. } => exit::NON_CONVERGENCE,
        _ => exit::BAD_INPUT,
    }
}

/// A failed command: message for stderr plus exit code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn bad_input(message: impl Into<String>) -> Self {
        Self {
            code: exit::BAD_INPUT,
            message: message.into(),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for Failure {}

impl From<Error> for Failure {
    fn from(err: Error) -> Self {
        Self {
            code: exit_code_for(&err),
            message: err.to_string(),
        }
    }
}

/// Resolves `--builtin`/`--problem` (and an optional `--T` override) to a document.
///
/// Returns the document and a short source label for the report.
pub fn load_problem(
    builtin_name: Option<&str>,
    problem: Option<&Path>,
    grid_size: Option<usize>,
) -> Result<(ProblemDocument, String), Failure> {
    match (builtin_name, problem) {
        (Some(name), None) => {
            let t = grid_size.ok_or_else(|| Failure::bad_input("--builtin needs --T"))?;
            Ok((builtin(name, t)?, format!("builtin:{name}")))
        }
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::bad_input(format!("cannot read {}: {e}", path.display())))?;
            let mut doc = ProblemDocument::from_json(&text)?;
            if let Some(t) = grid_size {
                doc.grid_size = t;
            }
            let name = path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            Ok((doc, format!("file:{name}")))
        }
        (Some(_), Some(_)) => Err(Failure::bad_input("--builtin and --problem are exclusive")),
        (None, None) => Err(Failure::bad_input("one of --builtin or --problem is required")),
    }
}

/// A `--sweep` axis: `T=3,10,25` or `lambda=-1,0,0.1`.
#[derive(Debug, Clone, PartialEq)]
pub enum Sweep {
    GridSize(Vec<usize>),
    Lambda(Vec<f64>),
}

impl std::str::FromStr for Sweep {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (key, list) = s.split_once('=').ok_or("expected T=<list> or lambda=<list>")?;
        let items = list.split(',').map(str::trim).filter(|x| !x.is_empty());
        let sweep = match key.trim() {
            "T" => Sweep::GridSize(
                items
                    .map(|x| x.parse().map_err(|e| format!("bad T value {x:?}: {e}")))
                    .collect::<Result<_, _>>()?,
            ),
            "lambda" => Sweep::Lambda(
                items
                    .map(|x| x.parse().map_err(|e| format!("bad lambda value {x:?}: {e}")))
                    .collect::<Result<_, _>>()?,
            ),
            other => return Err(format!("unknown sweep axis {other:?}")),
        };
        let empty = match &sweep {
            Sweep::GridSize(v) => v.is_empty(),
            Sweep::Lambda(v) => v.is_empty(),
        };
        if empty {
            return Err("empty sweep".into());
        }
        Ok(sweep)
    }
}

/// Runs one `solve` per sweep point on scoped threads; reports keep sweep order.
///
/// `builtin_name` rebuilds the bracket for each `T`; file problems only get
/// their `T` replaced.
pub fn run_sweep(
    base: &ProblemDocument,
    builtin_name: Option<&str>,
    source: &str,
    sweep: &Sweep,
    opts: &SolveOptions,
) -> Result<Vec<RunReport>, Failure> {
    let mut cases = Vec::new();
    match sweep {
        Sweep::GridSize(ts) => {
            for &t in ts {
                let mut doc = match builtin_name {
                    Some(name) => builtin(name, t)?,
                    None => base.clone(),
                };
                doc.grid_size = t;
                if builtin_name.is_some() {
                    doc.lambda = base.lambda;
                    doc.m = base.m;
                    doc.tol = base.tol;
                    doc.max_iter = base.max_iter;
                }
                cases.push((doc, opts.clone()));
            }
        }
        Sweep::Lambda(lambdas) => {
            for &lambda in lambdas {
                let mut o = opts.clone();
                o.lambda = Some(lambda);
                cases.push((base.clone(), o));
            }
        }
    }
    let reports = std::thread::scope(|scope| {
        let handles: Vec<_> = cases
            .iter()
            .map(|(doc, o)| scope.spawn(move || run_solve(doc.clone(), source, o).report))
            .collect();
        handles.into_iter().map(|h| h.join().expect("sweep worker panicked")).collect()
    });
    Ok(reports)
}
