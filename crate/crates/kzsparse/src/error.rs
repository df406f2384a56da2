use thiserror::Error;

/// Errors produced by the solver and analysis layers.
#[derive(Debug, Error)]
pub enum KzError {
    /// A caller-supplied argument violates a precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A brute-force or dense-matrix routine was asked for a problem
    /// larger than its size guard allows.
    #[error("size guard exceeded: {0}")]
    GuardExceeded(String),

    /// The sub-Gaussian step-size preset requires more rows than supplied.
    #[error("infeasible parameters: m = {m} but the preset needs m >= {minimal_m} (delta would be {delta:.6})")]
    InfeasibleParameters {
        m: usize,
        minimal_m: usize,
        delta: f64,
    },

    /// Configuration file or override could not be parsed or validated.
    /// The message names the offending field.
    #[error("config error: {0}")]
    Config(String),

    /// An I/O failure while persisting experiment artifacts.
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, KzError>;

impl KzError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        KzError::InvalidArgument(msg.into())
    }
}
