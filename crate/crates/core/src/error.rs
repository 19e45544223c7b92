use thiserror::Error;

use crate::diagnostics::SolveReport;
use crate::matrix::Matrix;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Neither divisibility rule of the semi-tensor product applies, or a
    /// block list does not have the required geometric shape.
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("shape error: {0}")]
    Shape(String),

    #[error("matrix is not positive semi-definite (eigenvalue {min_eig:e} below {threshold:e})")]
    NotPsd { min_eig: f64, threshold: f64 },

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("non-finite entry in {0}")]
    NonFinite(String),

    #[error("no convergence after {iterations} iterations")]
    NoConvergence {
        iterations: usize,
        /// Last iterate and the report accumulated so far.
        last: Box<(Matrix, SolveReport)>,
    },

    #[error("size cap exceeded: {needed} rows needed, cap is {cap}")]
    SizeCapExceeded { needed: usize, cap: usize },

    #[error("no admissible gamma found after {0} attempts")]
    GammaSelectionFailed(usize),

    #[error("insufficient history: {have} points, need at least {need}")]
    InsufficientHistory { have: usize, need: usize },

    #[error("parse error at {field}: {message}")]
    Parse { field: String, message: String },

    #[error("validation failed: {0}")]
    Validation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            field: field.into(),
            message: message.into(),
        }
    }
}
