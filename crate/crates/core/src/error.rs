use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Process exit code for malformed or unreadable input.
pub const EXIT_INPUT: i32 = 2;
/// Process exit code for invalid configuration.
pub const EXIT_CONFIG: i32 = 3;
/// Process exit code for a violated numerical invariant.
pub const EXIT_INTERNAL: i32 = 4;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: {0} (head dimension must be even and >= 2)")]
    InvalidDimension(usize),

    #[error("invalid base: {0} (base must be > 1)")]
    InvalidBase(f64),

    #[error("invalid ratio {0:?}: at least one component must be nonzero")]
    InvalidRatio([usize; 4]),

    #[error("indivisible ratio {ratio:?}: sum {sum} does not divide {pairs} rotation pairs (remainder {remainder})")]
    IndivisibleRatio {
        ratio: [usize; 4],
        sum: usize,
        pairs: usize,
        remainder: usize,
    },

    #[error("invalid period {0}: periods must be finite and > 0")]
    InvalidPeriod(f64),

    #[error("invalid coordinate: {0}")]
    InvalidCoordinate(String),

    #[error("shape mismatch: expected {expected}, got {got}")]
    Shape { expected: usize, got: usize },

    #[error("invalid config: {0}")]
    Config(String),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("{path}: unsupported format: {msg}")]
    Format { path: PathBuf, msg: String },

    #[error("softmax row {0} has no unmasked entries")]
    AllMaskedRow(usize),

    #[error("row {row} is not stochastic (sum {sum})")]
    NonStochastic { row: usize, sum: f64 },

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Maps each error onto the CLI's documented exit codes.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidDimension(_)
            | Error::InvalidBase(_)
            | Error::InvalidRatio(_)
            | Error::IndivisibleRatio { .. }
            | Error::InvalidPeriod(_)
            | Error::Config(_) => EXIT_CONFIG,
            Error::InvalidCoordinate(_)
            | Error::Shape { .. }
            | Error::Parse { .. }
            | Error::Format { .. }
            | Error::Io { .. } => EXIT_INPUT,
            Error::AllMaskedRow(_) | Error::NonStochastic { .. } | Error::Invariant(_) => {
                EXIT_INTERNAL
            }
        }
    }
}
