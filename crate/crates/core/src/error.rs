use thiserror::Error;

/// Errors raised by the toolkit's numerical operations.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    /// The cone description does not bracket along the probed ray.
    #[error("broken cone specification: {0}")]
    BrokenCone(String),

    #[error("eigenvalues left the admissible cone at node {node} (margin {margin:e})")]
    ConeExit { node: usize, margin: f64 },

    #[error("continuation failed: {0}")]
    Continuation(String),

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn arg<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Argument(msg.into()))
}

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
