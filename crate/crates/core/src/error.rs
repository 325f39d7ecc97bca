use thiserror::Error;

/// Errors raised by the simulation library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// The posterior carries no directional information (e.g. a flat prior).
    #[error("degenerate estimate: {0}")]
    Degenerate(String),
    /// The request would exceed a memory or enumeration bound.
    #[error("resource bound exceeded: {0}")]
    Resource(String),
    /// An adaptive run needs a feedback table at least as deep as the run.
    #[error("feedback table of depth {have} cannot drive {need} rounds")]
    MissingTable { have: usize, need: usize },
    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
