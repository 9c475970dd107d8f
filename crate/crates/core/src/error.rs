use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("singular matrix (determinant {0})")]
    SingularMatrix(String),
    #[error("invalid IFS: {0}")]
    InvalidIfs(String),
    #[error("resource limit: {what} needs {requested}, cap is {cap}")]
    ResourceLimit {
        what: &'static str,
        requested: u128,
        cap: u128,
    },
    #[error("empty set")]
    EmptySet,
    #[error("precondition failed: {0}")]
    PreconditionFailed(String),
    #[error("ambiguous cylinder: {0}")]
    AmbiguousCylinder(String),
    #[error("numeric underflow: {0}")]
    NumericUnderflow(String),
    #[error("unsupported IFS: {0}")]
    UnsupportedIfs(String),
    #[error("insufficient samples: got {got}, need at least {need}")]
    InsufficientSamples { got: usize, need: usize },
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
