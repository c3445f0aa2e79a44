use std::path::PathBuf;

use repo_vitals_github::FetchError;
use serde::Serialize;
use thiserror::Error;

pub type Result<T, E = CliError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("no model: {} does not exist; run `train` first", .0.display())]
    NoModel(PathBuf),

    #[error("{0} is not in the cache; run `ingest` first")]
    UnknownRepo(String),

    #[error("{0}")]
    Data(#[from] repo_vitals::Error),

    #[error("{0}")]
    Config(String),

    #[error("{0}")]
    Upstream(#[from] FetchError),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// 1 usage, 2 data, 3 upstream.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Upstream(_) => 3,
            CliError::NoModel(_) | CliError::UnknownRepo(_) | CliError::Data(_) | CliError::Config(_) | CliError::Io { .. } => 2,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::NoModel(_) => "no_model",
            CliError::UnknownRepo(_) => "unknown_repo",
            CliError::Data(repo_vitals::Error::InsufficientHistory { .. }) => "insufficient_history",
            CliError::Data(_) => "data",
            CliError::Config(_) => "config",
            CliError::Upstream(FetchError::RateLimited { .. }) => "rate_limited",
            CliError::Upstream(FetchError::NotFound(_)) => "not_found",
            CliError::Upstream(_) => "upstream",
            CliError::Io { .. } => "io",
        }
    }

    /// Body printed on stderr under `--json`.
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Body<'a> {
            error: &'a str,
            message: String,
            exit_code: i32,
        }
        serde_json::to_string(&Body {
            error: self.kind(),
            message: self.to_string(),
            exit_code: self.exit_code(),
        })
        .expect("error body serializes")
    }
}
