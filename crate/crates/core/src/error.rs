use thiserror::Error;

use crate::expr::ParseError;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("division by zero in jet (value {value:e})")]
    DivisionByZero { value: f64 },

    #[error("{func} domain violation at value {value:e}")]
    Domain { func: &'static str, value: f64 },

    #[error("derivative of order {requested} exceeds jet order {order}")]
    OrderExceeded { requested: usize, order: usize },

    #[error("coordinate index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("jets are expanded about different base points")]
    SpaceMismatch,

    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error("not completely nonholonomic at point: rank stalled at {rank} of {dim}")]
    NotCompletelyNonholonomic { rank: usize, dim: usize },

    #[error("declared levels {declared:?} disagree with computed flag {computed:?}")]
    LevelMismatch { declared: Vec<usize>, computed: Vec<usize> },

    #[error("frame not adapted: {0}")]
    FrameNotAdapted(String),

    #[error("singular point: {0}")]
    Singular(String),

    #[error("singular matrix: {0}")]
    SingularMatrix(String),

    #[error("not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("system file line {line}: {message}")]
    SystemFile { line: usize, message: String },

    #[error("invalid system definition: {0}")]
    InvalidSystem(String),

    #[error("unknown system '{0}'")]
    UnknownSystem(String),

    #[error("{0}")]
    Usage(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Process exit status for this error: 2 for usage/parse problems,
    /// 3 for numerical or singularity failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse(_)
            | Error::InvalidSystem(_)
            | Error::SystemFile { .. }
            | Error::UnknownSystem(_)
            | Error::Usage(_)
            | Error::Io(_)
            | Error::IndexOutOfRange { .. } => 2,
            _ => 3,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
