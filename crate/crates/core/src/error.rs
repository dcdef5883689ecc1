use thiserror::Error;

/// Coarse classification used by front ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Numeric,
    Precondition,
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("overflow: {0}")]
    Overflow(String),
    #[error("no convergence: {0}")]
    NoConvergence(String),
    #[error("step size underflow at x = {x}")]
    StepUnderflow { x: f64 },
    #[error("pole: {0}")]
    Pole(String),
    #[error("near pole: {0}")]
    NearPole(String),
    #[error("bracket failure at index {index}: {msg}")]
    Bracket { index: usize, msg: String },
    #[error("quadrature failure at lambda = {lambda}")]
    Quadrature { lambda: f64 },
    #[error("unsupported singularity: {0}")]
    Unsupported(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("rejected: {0}")]
    Rejected(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Invalid(_) | Error::Parse(_) => ErrorKind::Config,
            Error::Unsupported(_) | Error::Precondition(_) | Error::Rejected(_) => {
                ErrorKind::Precondition
            }
            _ => ErrorKind::Numeric,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
