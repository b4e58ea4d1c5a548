use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("point is not in the relative interior of any cone: {0}")]
    NotSubdividable(String),
    #[error("no-op: {0}")]
    NoOp(String),
    #[error("unsupported input: {0}")]
    UnsupportedInput(String),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("linear system is not ample over the base: {0}")]
    NotRelativelyAmple(String),
    #[error("flips do not exist in dimension 2")]
    ImpossibleInDim2,
    #[error("step cap of {0} exceeded")]
    StepCapExceeded(usize),
    #[error("invalid discrepancy profile: {0}")]
    InvalidProfile(String),
    #[error("precondition violated: {0}")]
    PreconditionViolation(String),
    #[error("internal invariant violated: {0}")]
    InternalInvariantViolation(String),
    #[error("monotonicity violated at link {link}: {reason}")]
    MonotonicityViolation { link: usize, reason: String },
    #[error("graph verification failed: {0}")]
    GraphVerification(String),
}

impl Error {
    /// Process exit code used by the command-line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::StepCapExceeded(_) => 3,
            Error::UnsupportedInput(_) | Error::ImpossibleInDim2 => 4,
            Error::InternalInvariantViolation(_)
            | Error::MonotonicityViolation { .. }
            | Error::GraphVerification(_) => 1,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
