use thiserror::Error;

use crate::engine::IterationTrace;
use crate::psd::PsdMatrix;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("ragged array: row {row} has {len} entries, expected {expected}")]
    Ragged { row: usize, len: usize, expected: usize },

    #[error("non-finite entry at ({i}, {j})")]
    NonFinite { i: usize, j: usize },

    #[error("matrix is not Hermitian: entries ({i}, {j}) and ({j}, {i}) differ by {diff:e}")]
    NotHermitian { i: usize, j: usize, diff: f64 },

    #[error("matrix is not positive semidefinite: eigenvalue {min_eig:e} is below -{bound:e}")]
    NotPsd { min_eig: f64, bound: f64 },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("invalid sequence: {0}")]
    InvalidSequence(String),

    #[error("invalid tolerance configuration: {0}")]
    InvalidConfig(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    /// Raised when an infinite-rank construction is requested for a
    /// finite-rank operator; such operators always decompose uniquely.
    #[error("finite-rank operator: {0}")]
    FiniteRank(String),

    #[error("iteration did not converge after {steps} steps (last gap {last_gap:e})")]
    NoConvergence {
        steps: usize,
        last_gap: f64,
        trace: Box<IterationTrace>,
        last: Box<PsdMatrix>,
    },

    #[error("iterative and closed-form absolutely continuous parts differ by {gap:e} in trace norm (allowed {allowed:e})")]
    OracleDisagreement {
        gap: f64,
        allowed: f64,
        iterative: Box<PsdMatrix>,
        closed: Box<PsdMatrix>,
    },

    #[error("internal consistency check failed: {0}")]
    Consistency(String),

    #[error("malformed input: {0}")]
    Parse(String),
}

impl Error {
    /// True for errors caused by the caller's data rather than by the numerics.
    pub fn is_invalid_input(&self) -> bool {
        matches!(
            self,
            Error::NotSquare { .. }
                | Error::Ragged { .. }
                | Error::NonFinite { .. }
                | Error::NotHermitian { .. }
                | Error::NotPsd { .. }
                | Error::DimensionMismatch { .. }
                | Error::InvalidSequence(_)
                | Error::InvalidConfig(_)
                | Error::Precondition(_)
                | Error::FiniteRank(_)
                | Error::Parse(_)
        )
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
