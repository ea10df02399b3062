use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid run configuration (grid sizes, budgets, presets, flags).
    #[error("configuration error: {0}")]
    Config(String),

    /// Invalid argument to an individual operation (index order, ranges).
    #[error("invalid argument: {0}")]
    Argument(String),

    /// A Monte Carlo estimator could not produce a usable result.
    #[error("estimation failed: {0}")]
    Estimation(String),

    /// A numerical routine (LP oracle, exchange solve) failed to converge.
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
