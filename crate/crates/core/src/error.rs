use thiserror::Error;

use crate::expr::EvalFault;

/// Errors raised by the solver library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("grid parameter T must be at least 1, got {0}")]
    InvalidGridSize(usize),

    #[error("mesh function needs {expected} values (T+2), got {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("index {index} outside the valid range {min}..={max}")]
    IndexOutOfRange { index: i64, min: i64, max: i64 },

    #[error("non-finite mesh value {value} at t={t}")]
    NonFinite { t: usize, value: f64 },

    #[error("grid mismatch: expected T={expected}, found T={found}")]
    GridMismatch { expected: usize, found: usize },

    #[error("singular operator: lambda={lambda} is within {tolerance:e} of eigenvalue lambda_{n}={eigenvalue}")]
    SingularOperator {
        lambda: f64,
        n: usize,
        eigenvalue: f64,
        tolerance: f64,
    },

    #[error("lambda={lambda} is outside the maximum-principle regime lambda < lambda_1={lambda1}")]
    OutOfRegime { lambda: f64, lambda1: f64 },

    #[error("tridiagonal solve lost accuracy: residual {residual:e} exceeds {limit:e}")]
    InaccurateSolve { residual: f64, limit: f64 },

    #[error("syntax error at position {position}: {message}")]
    Syntax { position: usize, message: String },

    #[error("unknown identifier `{0}`")]
    UnknownIdentifier(String),

    #[error("evaluation fault at t={t}, y={y}: {fault}")]
    Evaluation { t: f64, y: f64, fault: EvalFault },

    #[error("unknown builtin problem `{0}`")]
    UnknownBuiltin(String),

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("invalid bracket: {0}")]
    InvalidBracket(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
