//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by tensor algebra, losses, the solver, and I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),
    #[error("conjugate symmetry violated: residual {residual:.3e} exceeds {tol:.3e}")]
    SymmetryViolation { residual: f64, tol: f64 },
    #[error("SVD did not converge on frontal slice {slice}")]
    SvdFailure { slice: usize },
    #[error("negative weight {0} in weighted tubal nuclear norm")]
    NegativeWeight(f64),
    #[error("negative input {0} where a nonnegative value is required")]
    NegativeInput(f64),
    #[error("negative singular value {0}")]
    NegativeSingularValue(f64),
    #[error("weight column {column} decreases from row {row} to {next}",
            next = row + 1)]
    WeightOrderViolation { column: usize, row: usize },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("label at index {index} is {value}, expected 0 or 1")]
    NonBinaryLabel { index: usize, value: f64 },
    #[error("tuning grid is empty")]
    EmptyGrid,
    #[error("{folds} folds requested but only {n} samples available")]
    FoldTooSmall { folds: usize, n: usize },
    #[error("requested tubal rank {r} exceeds min(d1, d2) = {max}")]
    RankTooLarge { r: usize, max: usize },
    #[error("bad parameter: {0}")]
    BadParameter(String),
    #[error("grid too small: {0}")]
    TooSmall(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
