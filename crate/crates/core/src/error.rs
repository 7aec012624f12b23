use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("manifold mismatch: {0}")]
    ManifoldMismatch(String),

    #[error("invalid point: {0}")]
    InvalidPoint(String),

    #[error("points are on each other's cut locus: {0}")]
    CutLocus(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("Cholesky factorization failed even with jitter {0:e}")]
    Cholesky(f64),

    #[error("all {0} optimizer starts failed")]
    AllStartsFailed(usize),

    #[error("objective failed: {0}")]
    Objective(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
