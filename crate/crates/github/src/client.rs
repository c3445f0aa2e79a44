//! HTTP plumbing: authentication, pagination, retries and rate limits.

use std::sync::Arc;
use std::time::Duration;

use reqwest::header::{HeaderMap, ACCEPT, AUTHORIZATION, LINK, RETRY_AFTER, USER_AGENT};
use reqwest::{Response, StatusCode};
use serde_json::Value;
use tracing::{debug, warn};

use crate::gate::RateGate;
use crate::{FetchError, Result};

pub const DEFAULT_BASE_URL: &str = "https://api.github.com";
pub const TOKEN_ENV: &str = "REPO_VITALS_TOKEN";

#[derive(Debug, Clone)]
pub struct ClientConfig {
    pub base_url: String,
    pub token: Option<String>,
    pub per_page: u32,
    pub max_attempts: u32,
    pub backoff_base: Duration,
    /// Longest wait accepted for a rate-limit reset before giving up.
    pub max_reset_wait: Duration,
    pub user_agent: String,
}

impl Default for ClientConfig {
    fn default() -> Self {
        ClientConfig {
            base_url: DEFAULT_BASE_URL.into(),
            token: None,
            per_page: 100,
            max_attempts: 5,
            backoff_base: Duration::from_secs(1),
            max_reset_wait: Duration::from_secs(3600),
            user_agent: concat!("repo-vitals/", env!("CARGO_PKG_VERSION")).into(),
        }
    }
}

impl ClientConfig {
    /// Defaults with the token taken from `REPO_VITALS_TOKEN`, if set.
    pub fn from_env() -> Self {
        ClientConfig {
            token: std::env::var(TOKEN_ENV).ok().filter(|t| !t.is_empty()),
            ..ClientConfig::default()
        }
    }
}

#[derive(Debug, Clone)]
pub struct GithubClient {
    http: reqwest::Client,
    pub(crate) cfg: ClientConfig,
    gate: Arc<RateGate>,
}

enum Attempt {
    Done(Response),
    Retry { rate_limited: bool, delay: Duration },
}

impl GithubClient {
    pub fn new(cfg: ClientConfig) -> Result<Self> {
        Self::with_gate(cfg, Arc::new(RateGate::new()))
    }

    /// A client sharing `gate` with other clients.
    pub fn with_gate(cfg: ClientConfig, gate: Arc<RateGate>) -> Result<Self> {
        let http = reqwest::Client::builder()
            .build()
            .map_err(|e| FetchError::Transport {
                resource: "client".into(),
                reason: e.to_string(),
            })?;
        Ok(GithubClient { http, cfg, gate })
    }

    pub fn gate(&self) -> &Arc<RateGate> {
        &self.gate
    }

    fn url(&self, path: &str) -> String {
        format!("{}{}", self.cfg.base_url.trim_end_matches('/'), path)
    }

    fn backoff(&self, attempt: u32) -> Duration {
        self.cfg.backoff_base.saturating_mul(1 << attempt.min(16))
    }

    /// GET with retries. 404 maps to `NotFound`; other non-success statuses
    /// left after the retries map to `Transport` or `RateLimited`.
    pub(crate) async fn get(&self, url: &str, accept: &str) -> Result<Response> {
        let mut rate_limited = false;
        for attempt in 0..self.cfg.max_attempts {
            let waited = self.gate.wait().await;
            if waited > Duration::ZERO {
                debug!(?waited, "waited for rate-limit reset");
            }
            match self.attempt(url, accept, attempt).await? {
                Attempt::Done(resp) => return Ok(resp),
                Attempt::Retry { rate_limited: r, delay } => {
                    rate_limited = r;
                    if attempt + 1 < self.cfg.max_attempts {
                        warn!(url, attempt, ?delay, "retrying");
                        tokio::time::sleep(delay).await;
                    }
                }
            }
        }
        let resource = url.to_string();
        let attempts = self.cfg.max_attempts;
        Err(if rate_limited {
            FetchError::RateLimited { resource, attempts }
        } else {
            FetchError::Transport {
                resource,
                reason: format!("gave up after {attempts} attempts"),
            }
        })
    }

    async fn attempt(&self, url: &str, accept: &str, attempt: u32) -> Result<Attempt> {
        let mut req = self
            .http
            .get(url)
            .header(USER_AGENT, &self.cfg.user_agent)
            .header(ACCEPT, accept);
        if let Some(token) = &self.cfg.token {
            req = req.header(AUTHORIZATION, format!("token {token}"));
        }
        let resp = match req.send().await {
            Ok(r) => r,
            Err(e) if e.is_connect() || e.is_timeout() => {
                return Ok(Attempt::Retry {
                    rate_limited: false,
                    delay: self.backoff(attempt),
                })
            }
            Err(e) => {
                return Err(FetchError::Transport {
                    resource: url.to_string(),
                    reason: e.to_string(),
                })
            }
        };
        let status = resp.status();
        let headers = resp.headers().clone();
        if let Some(reset) = exhausted_reset(&headers) {
            self.gate.close_until_epoch(reset).await;
        }
        if status.is_success() {
            return Ok(Attempt::Done(resp));
        }
        if status == StatusCode::NOT_FOUND {
            return Err(FetchError::NotFound(url.to_string()));
        }
        if status.is_server_error() {
            return Ok(Attempt::Retry {
                rate_limited: false,
                delay: self.backoff(attempt),
            });
        }
        if status == StatusCode::FORBIDDEN || status == StatusCode::TOO_MANY_REQUESTS {
            let primary = exhausted_reset(&headers);
            let body = resp.text().await.unwrap_or_default();
            let secondary = body.to_ascii_lowercase().contains("secondary rate limit")
                || headers.contains_key(RETRY_AFTER)
                || status == StatusCode::TOO_MANY_REQUESTS;
            if let Some(reset) = primary {
                let now = std::time::SystemTime::now()
                    .duration_since(std::time::UNIX_EPOCH)
                    .unwrap_or_default();
                let wait = Duration::from_secs(reset).saturating_sub(now);
                if wait > self.cfg.max_reset_wait {
                    return Err(FetchError::RateLimited {
                        resource: url.to_string(),
                        attempts: attempt + 1,
                    });
                }
                return Ok(Attempt::Retry {
                    rate_limited: true,
                    delay: Duration::ZERO,
                });
            }
            if secondary {
                let delay = retry_after(&headers).unwrap_or_else(|| self.backoff(attempt));
                return Ok(Attempt::Retry {
                    rate_limited: true,
                    delay,
                });
            }
        }
        Err(FetchError::Transport {
            resource: url.to_string(),
            reason: format!("HTTP {status}"),
        })
    }

    pub(crate) async fn get_json(&self, path: &str) -> Result<Value> {
        let url = self.url(path);
        let resp = self.get(&url, "application/vnd.github+json").await?;
        resp.json().await.map_err(|e| FetchError::malformed(&url, e.to_string()))
    }

    /// Raw body, or `None` on 404.
    pub(crate) async fn get_raw_optional(&self, path: &str) -> Result<Option<String>> {
        let url = self.url(path);
        match self.get(&url, "application/vnd.github.raw").await {
            Ok(resp) => resp
                .text()
                .await
                .map(Some)
                .map_err(|e| FetchError::malformed(&url, e.to_string())),
            Err(FetchError::NotFound(_)) => Ok(None),
            Err(e) => Err(e),
        }
    }

    /// Every item of a paginated list endpoint, following `Link: rel="next"`.
    pub(crate) async fn get_all(&self, path: &str) -> Result<Vec<Value>> {
        let sep = if path.contains('?') { '&' } else { '?' };
        let mut next = Some(self.url(&format!("{path}{sep}per_page={}", self.cfg.per_page)));
        let mut items = Vec::new();
        while let Some(url) = next {
            let resp = self.get(&url, "application/vnd.github+json").await?;
            next = resp
                .headers()
                .get(LINK)
                .and_then(|v| v.to_str().ok())
                .and_then(next_link);
            let page: Value = resp.json().await.map_err(|e| FetchError::malformed(&url, e.to_string()))?;
            match page {
                Value::Array(mut v) => items.append(&mut v),
                _ => return Err(FetchError::malformed(&url, "expected a JSON array")),
            }
        }
        Ok(items)
    }
}

fn header_u64(headers: &HeaderMap, name: &str) -> Option<u64> {
    headers.get(name)?.to_str().ok()?.trim().parse().ok()
}

/// The reset epoch when the primary budget is spent.
fn exhausted_reset(headers: &HeaderMap) -> Option<u64> {
    (header_u64(headers, "x-ratelimit-remaining")? == 0)
        .then(|| header_u64(headers, "x-ratelimit-reset"))
        .flatten()
}

fn retry_after(headers: &HeaderMap) -> Option<Duration> {
    header_u64(headers, RETRY_AFTER.as_str()).map(Duration::from_secs)
}

/// Target of the `rel="next"` entry of an RFC 8288 `Link` header.
pub(crate) fn next_link(header: &str) -> Option<String> {
    header.split(',').find_map(|part| {
        let mut pieces = part.split(';');
        let target = pieces.next()?.trim();
        let is_next = pieces.any(|p| {
            let p = p.trim();
            p == "rel=\"next\"" || p == "rel=next"
        });
        (is_next && target.starts_with('<') && target.ends_with('>'))
            .then(|| target[1..target.len() - 1].to_string())
    })
}
