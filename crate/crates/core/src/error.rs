use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid signal: {0}")]
    InvalidSignal(String),

    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("quadrature did not reach relative tolerance {tol:e} on [{lo}, {hi}]")]
    QuadratureNonConvergence { lo: f64, hi: f64, tol: f64 },

    #[error("gram entry ({i}, {j}): {source}")]
    GramEntry {
        i: usize,
        j: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("system matrix is not positive definite even after diagonal jitter (lambda = {lambda:e})")]
    IllConditioned { lambda: f64 },

    #[error("degenerate smoother: trace(I - H) = {trace:e} at lambda = {lambda:e}")]
    DegenerateSmoother { lambda: f64, trace: f64 },

    #[error("every point of the lambda grid gave a degenerate GCV score")]
    LambdaSelection,

    #[error("undefined score: {0}")]
    UndefinedScore(&'static str),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: u64,
        msg: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures of the numerical pipeline, as opposed to bad input or IO.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::QuadratureNonConvergence { .. }
            | Error::IllConditioned { .. }
            | Error::DegenerateSmoother { .. }
            | Error::LambdaSelection
            | Error::UndefinedScore(_) => true,
            Error::GramEntry { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}
