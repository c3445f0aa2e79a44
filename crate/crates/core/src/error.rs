use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed {context}: field `{field}`: {reason}")]
    Malformed {
        context: String,
        field: String,
        reason: String,
    },

    #[error("{repo}: insufficient history (need {needed_months} months before {anchor})")]
    InsufficientHistory {
        repo: String,
        needed_months: u32,
        anchor: String,
    },

    #[error("{0}: repository has no commits")]
    NoCommits(String),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("need at least {needed} rows, got {got}")]
    TooFewRows { needed: usize, got: usize },

    #[error("column mismatch: {0}")]
    ColumnMismatch(String),

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("training data contains a single class")]
    SingleClass,

    #[error("tree {tree} has no out-of-bag rows")]
    NoOobRows { tree: usize },

    #[error("class {class} has {count} rows, fewer than {k} folds")]
    TooFewPerClass {
        class: &'static str,
        count: usize,
        k: usize,
    },

    #[error("empty sample")]
    EmptySample,

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("zero variance input")]
    ZeroVariance,

    #[error("project is predicted unmaintained (p_active = {p_active}); LMA is not defined")]
    UnmaintainedProject { p_active: f64 },

    #[error("need at least two groups with two or more samples, got {0}")]
    TooFewGroups(usize),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("JSON error in {context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },

    #[error("CSV error in {context}: {source}")]
    Csv {
        context: String,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn malformed(
        context: impl Into<String>,
        field: impl Into<String>,
        reason: impl Into<String>,
    ) -> Self {
        Error::Malformed {
            context: context.into(),
            field: field.into(),
            reason: reason.into(),
        }
    }
}
