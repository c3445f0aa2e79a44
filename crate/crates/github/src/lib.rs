//! GitHub REST ingestion.
//!
//! [`GithubClient::fetch_snapshot`] walks the paginated list endpoints of one
//! repository and assembles a canonical [`RepoSnapshot`]. All requests made
//! through one client share a [`RateGate`], so concurrent fetches stop
//! together when the rate-limit budget runs out.

mod client;
mod gate;
mod snapshot;

pub use client::{ClientConfig, GithubClient, DEFAULT_BASE_URL, TOKEN_ENV};
pub use gate::RateGate;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum FetchError {
    #[error("not found: {0}")]
    NotFound(String),
    #[error("rate limited on {resource} after {attempts} attempts")]
    RateLimited { resource: String, attempts: u32 },
    #[error("transport error on {resource}: {reason}")]
    Transport { resource: String, reason: String },
    #[error("malformed payload from {resource}: {reason}")]
    Malformed { resource: String, reason: String },
}

impl FetchError {
    pub(crate) fn malformed(resource: &str, reason: impl Into<String>) -> Self {
        FetchError::Malformed {
            resource: resource.to_string(),
            reason: reason.into(),
        }
    }
}

pub type Result<T, E = FetchError> = std::result::Result<T, E>;
