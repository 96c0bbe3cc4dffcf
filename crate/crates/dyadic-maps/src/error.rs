use thiserror::Error;

/// Errors shared by every module of the crate.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("division by zero")]
    DivisionByZero,
    #[error("domain error: {0}")]
    Domain(String),
    #[error("segment budget of {budget} exceeded")]
    Budget { budget: usize },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("infeasible at index {index}")]
    Infeasible { index: usize },
    #[error("no positive solution: {0}")]
    NoPositiveSolution(String),
    #[error("unsupported case: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
