use thiserror::Error;

/// Errors produced by the smoothlab library.
#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on the caller's arguments was violated.
    #[error("usage error: {0}")]
    Usage(String),

    /// A query fell outside the range covered by a prebuilt table.
    #[error("out of range: {0}")]
    OutOfRange(String),

    /// The delay-equation solver could not certify the requested tolerance.
    #[error("solver failed to reach tol={tol:e}; achieved error {achieved:e}")]
    SolverFailure { tol: f64, achieved: f64 },

    /// An exact enumeration would exceed its configured cap; callers fall
    /// back to Monte Carlo.
    #[error("exact enumeration infeasible: bound {bound:.3e} exceeds cap {cap}")]
    InfeasibleExact { bound: f64, cap: u64 },

    /// A persisted table file could not be parsed.
    #[error("cache parse error: {0}")]
    Cache(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    pub fn out_of_range(msg: impl Into<String>) -> Self {
        Error::OutOfRange(msg.into())
    }
}
