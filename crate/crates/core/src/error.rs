use thiserror::Error;

/// Errors raised by the array, signal and estimation routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{what} out of domain: {detail}")]
    Domain { what: &'static str, detail: String },

    #[error("no null found {side} of {theta_prime} rad within the searched range")]
    NoNull {
        side: &'static str,
        theta_prime: f64,
    },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("manifold Gram matrix is numerically singular (condition number {cond:.3e})")]
    Singular { cond: f64 },

    #[error("malformed tensor file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
