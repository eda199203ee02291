//! Problem documents and the two builtin example problems.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{parse, Expr, Variable};

/// JSON problem description.
///
/// `f` is an expression in `t`, `y` and `T`; `lower` and `upper` define the
/// bracket `α₀(t)`, `β₀(t)` and may use `t` and `T` only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemDocument {
    #[serde(rename = "T")]
    pub grid_size: usize,
    pub f: String,
    pub lower: String,
    pub upper: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(rename = "M", default, skip_serializing_if = "Option::is_none")]
    pub m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
}

/// The three parsed expressions of a document.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedProblem {
    pub f: Expr,
    pub lower: Expr,
    pub upper: Expr,
}

impl ProblemDocument {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidProblem(e.to_string()))
    }

    /// Parses all expressions and checks that the bracket does not use `y`.
    pub fn parse(&self) -> Result<ParsedProblem> {
        if self.grid_size < 1 {
            return Err(Error::InvalidGridSize(self.grid_size));
        }
        let f = parse(&self.f)?;
        let lower = parse(&self.lower)?;
        let upper = parse(&self.upper)?;
        for (name, e) in [("lower", &lower), ("upper", &upper)] {
            if e.references(Variable::State) {
                return Err(Error::InvalidProblem(format!(
                    "`{name}` must be a function of t only, but references y"
                )));
            }
        }
        Ok(ParsedProblem { f, lower, upper })
    }
}

pub const BUILTIN_NAMES: [&str; 2] = ["example1", "example2"];

/// Builtin problems, instantiated for grid parameter `grid_size`.
///
/// * `example1`: `-Δ²y(t-1) = e^{y(t)} / e^{(T+1)²}`, bracket `0 <= y <= (T+1)t - t²/2`;
/// * `example2`: `-Δ²y(t-1) = e^t - e^{y(t)}`, bracket `0 <= y <= t`.
pub fn builtin(name: &str, grid_size: usize) -> Result<ProblemDocument> {
    let (f, lower, upper) = match name {
        "example1" => ("exp(y)/exp((T+1)^2)", "0", "(T+1)*t - t^2/2"),
        "example2" => ("exp(t) - exp(y)", "0", "t"),
        _ => return Err(Error::UnknownBuiltin(name.to_string())),
    };
    Ok(ProblemDocument {
        grid_size,
        f: f.into(),
        lower: lower.into(),
        upper: upper.into(),
        lambda: None,
        m: None,
        tol: None,
        max_iter: None,
    })
}

/// One-sided Lipschitz constant published alongside each builtin.
///
/// `example1`: `1/e^{(T+1)²}`. `example2`: `e^{T+1}`, which is not a valid lower
/// bound on the difference quotients of `e^t - e^y` (they are all negative);
/// it is kept only so reports can show the disagreement with the sampled value.
pub fn reference_lipschitz(name: &str, grid_size: usize) -> Result<f64> {
    let n = (grid_size + 1) as f64;
    match name {
        "example1" => Ok((-(n * n)).exp()),
        "example2" => Ok(n.exp()),
        _ => Err(Error::UnknownBuiltin(name.to_string())),
    }
}
