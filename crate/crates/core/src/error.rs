use thiserror::Error;

/// Errors produced by the analytic, optimization and simulation routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("integration did not converge: {0}")]
    Integration(String),

    #[error("bisection did not converge: {0}")]
    Bisection(String),

    #[error("graph validation failed: {0}")]
    Validation(String),

    #[error("graph has {nodes} nodes; cut enumeration is limited to {limit} (use the flow optimizer instead)")]
    TooManyNodes { nodes: usize, limit: usize },

    #[error("linear program failed: {0}")]
    LinearProgram(String),

    #[error("failed to parse graph: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
