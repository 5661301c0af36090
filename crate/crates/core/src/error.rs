use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse classification used by the CLI to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Usage,
    Data,
    Numeric,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::Usage => 1,
            ErrorKind::Data => 2,
            ErrorKind::Numeric => 3,
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    FileUnreadable {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid survey definition: {0}")]
    InvalidSurvey(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("unknown label {label:?} for question {question}")]
    UnknownLabel { question: String, label: String },
    #[error("value {value:?} is outside the response scale of question {question}")]
    OutOfScale { question: String, value: String },
    #[error("question {question} does not use a {expected} scale")]
    WrongScale { question: String, expected: &'static str },
    #[error("unknown question {0}")]
    UnknownQuestion(String),
    #[error("header does not match the survey definition: {0}")]
    SchemaMismatch(String),
    #[error("row {row}: duplicate respondent key ({org_id}, {respondent_id})")]
    DuplicateKey {
        row: usize,
        org_id: String,
        respondent_id: String,
    },
    #[error("malformed input at row {row}: {message}")]
    Malformed { row: usize, message: String },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("observation {step} has zero density under every state")]
    NumericUnderflow { step: usize },
    #[error("non-finite value encountered: {0}")]
    NonFinite(String),
    #[error("training labels contain a single class")]
    SingleClass,
    #[error("no training data")]
    EmptyData,
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("too few rows: {0}")]
    TooFewRows(String),
    #[error("background set is empty")]
    EmptyBackground,
    #[error("brute-force Shapley supports at most {max} features, got {actual}")]
    TooManyFeatures { max: usize, actual: usize },
    #[error("zero variance in {0}")]
    ZeroVariance(String),
    #[error("unknown selector {0}")]
    UnknownSelector(String),
    #[error("report failed schema validation: {0}")]
    SchemaValidation(String),
    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("toml: {0}")]
    Toml(#[from] toml::de::Error),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Stage { source, .. } => source.kind(),
            Error::InvalidConfig(_) | Error::InvalidArgument(_) | Error::UnknownSelector(_) => {
                ErrorKind::Usage
            }
            Error::NumericUnderflow { .. } | Error::NonFinite(_) | Error::ZeroVariance(_) => {
                ErrorKind::Numeric
            }
            _ => ErrorKind::Data,
        }
    }

    /// Wraps an error with the pipeline stage it came from.
    pub fn in_stage(self, stage: &'static str) -> Error {
        match self {
            e @ Error::Stage { .. } => e,
            e => Error::Stage {
                stage,
                source: Box::new(e),
            },
        }
    }
}
