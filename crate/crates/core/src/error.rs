use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The requested Hurst branch is not implemented (kernel operations need H > 1/2).
    #[error("unsupported branch: {0}")]
    UnsupportedBranch(String),

    /// Grids, breakpoints or time nodes do not line up.
    #[error("alignment error: {0}")]
    Alignment(String),

    #[error("covariance matrix is not positive definite: leading minor {minor} has pivot {pivot:e}")]
    NotPositiveDefinite { minor: usize, pivot: f64 },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("parameter validation failed: {0}")]
    Validation(String),

    #[error("no feasible existence time: binding constraint {binding} ({detail})")]
    Infeasible { binding: String, detail: String },

    #[error("picard iterate left the ball at iteration {iteration}: sup |u|_q = {norm:e} > {limit:e}")]
    Divergence {
        iteration: usize,
        norm: f64,
        limit: f64,
    },

    #[error("unknown strategy '{name}' (registered: {known})")]
    UnknownStrategy { name: String, known: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
