use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("config parse error on line {line}: {msg}")]
    ConfigParse { line: usize, msg: String },

    #[error("unknown config key `{0}`")]
    UnknownKey(String),

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("quadrature rule of order {order} is not defined for {kind}")]
    QuadratureOrder { kind: &'static str, order: usize },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("position {x} lies outside [{lo}, {hi}]")]
    OutOfRange { x: f64, lo: f64, hi: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("quadrature did not converge: achieved error estimate {estimate:e} > tolerance {tol:e}")]
    QuadratureNonConvergence { estimate: f64, tol: f64 },

    #[error("non-finite value in rhs at t = {t}: cell {cell}, unknown {unknown}")]
    NonFinite { t: f64, cell: usize, unknown: usize },

    #[error("step size underflow at t = {t} (h = {h:e}, {steps} accepted steps, {rejected} rejected)")]
    StepUnderflow {
        t: f64,
        h: f64,
        steps: usize,
        rejected: usize,
    },

    #[error("step budget of {budget} exhausted at t = {t}")]
    StepBudget { t: f64, budget: usize },

    #[error("singular matrix in implicit solve (block {block})")]
    Singular { block: usize },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code: 2 for bad input, 3 for numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::QuadratureNonConvergence { .. }
            | Error::NonFinite { .. }
            | Error::StepUnderflow { .. }
            | Error::StepBudget { .. }
            | Error::Singular { .. } => 3,
            _ => 2,
        }
    }
}
