//! Error type shared by every module.

use thiserror::Error;

/// Failures reported by the library. Nothing is silently repaired.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("dimension {dim} exceeds the supported limit {limit}")]
    TooLarge { dim: usize, limit: usize },
    #[error("iteration did not converge: {0}")]
    NonConvergence(String),
    #[error("matrix is not Hermitian (defect {0:.3e})")]
    NotHermitian(f64),
    #[error("matrix is not positive semidefinite (eigenvalue {0:.3e})")]
    NotPsd(f64),
    #[error("singular input: {0}")]
    Singular(String),
    #[error("zero matrix has no reduced minimum modulus")]
    ZeroMatrix,
    #[error("operator is not power bounded: {0}")]
    NotPowerBounded(String),
    #[error("numerically ambiguous input: {0}")]
    Ambiguous(String),
    #[error("not a contraction (norm {0:.6})")]
    NotContraction(f64),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("index {index} is outside the universe {universe}")]
    Universe { index: String, universe: String },
    #[error("support exceeded the cap of {0} entries")]
    SupportCap(usize),
    #[error("unknown name: {0}")]
    Unknown(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("invalid input: {0}")]
    Input(String),
}

pub type Result<T> = std::result::Result<T, Error>;
