use thiserror::Error;

use crate::linalg::CgReport;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("index ({row}, {col}) out of range for {nrows}x{ncols} matrix")]
    IndexOutOfRange {
        row: usize,
        col: usize,
        nrows: usize,
        ncols: usize,
    },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite value encountered in conjugate gradient at iteration {iteration}")]
    NonFinite { iteration: usize },

    #[error("dof {dof} constrained twice with conflicting values {first} and {second}")]
    ConflictingConstraint { dof: usize, first: f64, second: f64 },

    #[error("linear solve failed at time step {step}: {report:?}")]
    SolverFailed { step: usize, report: CgReport },

    #[error("scheme residual {residual:e} at time step {step} exceeds {limit:e}")]
    ResidualCheck { step: usize, residual: f64, limit: f64 },

    #[error("study cell h = 1/{cells}, N = {steps} failed: {source}")]
    Cell {
        cells: usize,
        steps: usize,
        source: Box<Error>,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
