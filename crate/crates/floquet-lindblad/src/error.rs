//! Error types shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Input contained NaN or infinite entries, or was otherwise malformed.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Matrix dimensions do not match the operation's requirements.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A matrix decomposition (LU, eigendecomposition, ...) failed or the
    /// matrix was numerically singular.
    #[error("decomposition failed: {0}")]
    Decomposition(String),

    /// Principal matrix logarithm requested for a matrix with spectrum on
    /// the closed negative real axis and no branch nudge opted in.
    #[error("eigenvalue on the principal branch cut: {0}")]
    BranchCut(String),

    /// Intermediate quantity overflowed the representable floating range.
    #[error("numeric range exceeded: {0}")]
    NumericRange(String),

    /// A Hermitian input was required but the argument is not Hermitian
    /// within tolerance.
    #[error("matrix is not Hermitian: residual {residual:e} exceeds tol {tol:e}")]
    NotHermitian { residual: f64, tol: f64 },

    /// A bath spectral density sample was not positive semidefinite.
    #[error("invalid bath: {0}")]
    InvalidBath(String),

    /// A map that must be inverted is numerically singular.
    #[error("map not invertible: condition estimate {0:e}")]
    NotInvertible(f64),

    /// Configuration file failed to parse or validate.
    #[error("config error in field `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
