use thiserror::Error;

use crate::eigensolver::GroundState;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Argument outside the range where the quantity is defined.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("state {state:#b} is not a member of the sector")]
    Lookup { state: u64 },

    #[error("shape mismatch: expected {expected}, got {got}")]
    Shape { expected: usize, got: usize },

    #[error("sector dimension {dim} exceeds the dense limit {max}")]
    TooLarge { dim: usize, max: usize },

    /// The iteration budget ran out. The best iterate is kept for inspection.
    #[error("Lanczos did not converge within {iterations} matrix-vector products (residual {residual:.3e})")]
    NoConvergence {
        iterations: usize,
        residual: f64,
        best: Box<GroundState>,
    },

    /// Fidelity between members of a degenerate multiplet depends on the
    /// arbitrary choice of basis inside it, so such states are refused.
    #[error("degenerate ground state: gap {gap:.3e} below threshold {threshold:.3e}")]
    Degenerate {
        gap: f64,
        threshold: f64,
        state: Box<GroundState>,
    },

    #[error("divergent: {0}")]
    Divergent(String),

    #[error("insufficient data: need at least {need}, got {got}")]
    InsufficientData { need: usize, got: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
