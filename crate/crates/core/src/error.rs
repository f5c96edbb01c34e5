use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("space mismatch: {0}")]
    SpaceMismatch(String),
    #[error("set is unbounded under the binding")]
    Unbounded,
    #[error("{what} cap exceeded (cap {cap})")]
    CapExceeded { what: &'static str, cap: usize },
    #[error("degree fit failed: {0}")]
    DegreeFit(String),
    #[error("{line}:{col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },
    #[error("invalid program: {0}")]
    Invalid(String),
    #[error("unschedulable: {0}")]
    Unschedulable(String),
    #[error("execution fault: {0}")]
    Exec(String),
    #[error("transformation refused: {0}")]
    Refused(String),
    #[error("internal invariant breach: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
