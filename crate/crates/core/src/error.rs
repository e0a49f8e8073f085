//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Input lengths do not line up (function values vs. points, sigma vs. sample, ...).
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A documented precondition of an operation was violated.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// Exact sign-vector enumeration was requested above the cap.
    #[error("enumeration capacity exceeded: n = {n} > cap = {cap}; use the Monte Carlo estimator")]
    Capacity { n: usize, cap: usize },

    /// Instance-level configuration is inconsistent (harness and CLI).
    #[error("configuration error: {0}")]
    Config(String),

    /// Unrecognized bound identifier.
    #[error("unknown theorem id: {0}")]
    UnknownTheorem(String),

    /// A grid search found no admissible point.
    #[error("unsatisfied: {0}")]
    Unsatisfied(String),

    /// Numeric failure (non-convergence, detected non-sub-root trace, ...).
    #[error("numeric error: {0}")]
    Numeric(String),

    /// Malformed input text.
    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
