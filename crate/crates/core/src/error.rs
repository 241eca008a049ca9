use thiserror::Error;

/// Errors raised by the solver library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error(
        "eigensolver did not converge after {sweeps} sweeps (off-diagonal {off_diagonal:.3e})"
    )]
    Convergence { sweeps: usize, off_diagonal: f64 },

    #[error("matrix is singular to machine precision (pivot column {column})")]
    Singular { column: usize },

    #[error("scale calibration failed: {0}")]
    Calibration(String),

    #[error("invalid circuit state: {0}")]
    State(String),

    #[error("post-selection is degenerate: surviving norm {0:.3e}")]
    DegeneratePostselection(f64),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

impl Error {
    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
