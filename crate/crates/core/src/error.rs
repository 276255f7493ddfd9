use thiserror::Error;

/// Errors produced by ingestion, measure construction and fitting.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum PmaError {
    #[error("parse error at row {row}{}: {message}", column.map(|c| format!(", column {c}")).unwrap_or_default())]
    Parse {
        row: usize,
        column: Option<usize>,
        message: String,
    },
    #[error("duplicate {kind} id `{id}`")]
    DuplicateId { kind: &'static str, id: String },
    #[error("empty input: {0}")]
    EmptyInput(String),
    #[error("metadata references unknown sample `{0}`")]
    UnknownSample(String),
    #[error("unknown annotation `{0}`")]
    UnknownAnnotation(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("measure has zero total mass")]
    EmptyMeasure,
    #[error("eigendecomposition failed: {0}")]
    Decomposition(String),
    #[error("all principal moments are below the rank tolerance")]
    RankZero,
    #[error("{what} {value} out of range 1..={max}")]
    OutOfRange {
        what: &'static str,
        value: usize,
        max: usize,
    },
}

impl PmaError {
    pub(crate) fn parse(row: usize, column: Option<usize>, message: impl Into<String>) -> Self {
        PmaError::Parse {
            row,
            column,
            message: message.into(),
        }
    }
}

pub type Result<T, E = PmaError> = std::result::Result<T, E>;
