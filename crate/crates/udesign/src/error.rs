use thiserror::Error;

/// Errors raised by design construction, bound evaluation and search.
#[derive(Debug, Error)]
pub enum Error {
    /// Matrix/levels dimensions disagree or a row is ragged.
    #[error("structural error: {0}")]
    Structure(String),

    /// An entry lies outside its column's level range.
    #[error("invalid entry {value} at row {row}, column {column}: levels are 0..{levels}")]
    InvalidEntry {
        row: usize,
        column: usize,
        value: u32,
        levels: u32,
    },

    /// A block that must be U-type (or {1,2}-balanced) is not.
    #[error("balance violation: {0}")]
    Unbalanced(String),

    /// The augmentation run count breaks a divisibility rule or exceeds n.
    #[error("incompatible augmentation: {0}")]
    Incompatible(String),

    /// Parameters outside a formula's domain (e.g. n1 = 1).
    #[error("domain error: {0}")]
    Domain(String),

    /// A caller broke an operation's contract (e.g. swapping an initial row).
    #[error("contract violation: {0}")]
    Contract(String),

    /// Design file could not be parsed.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code for the CLI: 2 for parse failures, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse { .. } => 2,
            _ => 1,
        }
    }
}
