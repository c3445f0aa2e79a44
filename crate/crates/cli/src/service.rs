//! Read-only badge service over a trained model.

use std::future::Future;
use std::path::{Path, PathBuf};
use std::pin::Pin;
use std::sync::{Arc, RwLock};
use std::time::{Duration, SystemTime};

use axum::extract::{Path as UrlPath, State};
use axum::http::{header, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use repo_vitals::features::extract_features;
use repo_vitals::lma::{Color, Level, LmaStatus};
use repo_vitals::snapshot::{load_snapshot, save_snapshot, snapshot_file_name};
use repo_vitals::{Class, RepoSnapshot, Timestamp};
use repo_vitals_github::{FetchError, GithubClient};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::bundle::ModelBundle;
use crate::error::{CliError, Result};

pub const CACHE_CONTROL: &str = "max-age=86400";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BadgeLabel {
    Active,
    Unmaintained,
    NotAnalysed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BadgePayload {
    pub owner: String,
    pub repo: String,
    pub label: BadgeLabel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lma: Option<f64>,
    pub level: Level,
    pub color: Color,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_active: Option<f64>,
    pub computed_at: Timestamp,
    pub model_version: String,
}

/// Scores a snapshot. Too little history or no commits gives a grey
/// `not_analysed` badge rather than an error.
pub fn badge_for(s: &RepoSnapshot, model: &ModelBundle, now: Timestamp) -> Result<BadgePayload> {
    let mut payload = BadgePayload {
        owner: s.owner_login.clone(),
        repo: s.repo_name.clone(),
        label: BadgeLabel::NotAnalysed,
        lma: None,
        level: Level::NotAnalysed,
        color: Level::NotAnalysed.color(),
        p_active: None,
        computed_at: now,
        model_version: model.model_version.clone(),
    };
    let features = model
        .anchor
        .resolve(s)
        .and_then(|at| extract_features(s, model.scenario, Some(at)));
    let fm = match features {
        Ok(fm) => fm,
        Err(repo_vitals::Error::InsufficientHistory { .. } | repo_vitals::Error::NoCommits(_)) => {
            return Ok(payload)
        }
        Err(e) => return Err(e.into()),
    };
    let dp = fm.flatten();
    let pred = model.forest.predict_named(&dp.names, &dp.values)?;
    let status = LmaStatus::from_prediction(&pred);
    let level = model.level(&pred);
    payload.label = match pred.label {
        Class::Active => BadgeLabel::Active,
        Class::Unmaintained => BadgeLabel::Unmaintained,
    };
    payload.lma = status.lma();
    payload.level = level;
    payload.color = level.color();
    payload.p_active = Some(pred.p_active);
    Ok(payload)
}

pub type Lookup<'a> = Pin<Box<dyn Future<Output = Result<Option<RepoSnapshot>>> + Send + 'a>>;

/// Where the service finds snapshots. `Ok(None)` means unknown repository.
pub trait SnapshotSource: Send + Sync {
    fn lookup<'a>(&'a self, owner: &'a str, name: &'a str) -> Lookup<'a>;
}

fn read_cached(dir: &Path, owner: &str, name: &str) -> Result<Option<RepoSnapshot>> {
    let path = dir.join(snapshot_file_name(owner, name));
    if !path.is_file() {
        return Ok(None);
    }
    Ok(Some(load_snapshot(&path)?))
}

/// Snapshots already in the cache directory.
pub struct CacheSource {
    pub dir: PathBuf,
}

impl SnapshotSource for CacheSource {
    fn lookup<'a>(&'a self, owner: &'a str, name: &'a str) -> Lookup<'a> {
        Box::pin(async move { read_cached(&self.dir, owner, name) })
    }
}

/// Cache first; on a miss, fetch from the API and store the result.
pub struct FetchingSource {
    pub dir: PathBuf,
    pub client: GithubClient,
}

impl SnapshotSource for FetchingSource {
    fn lookup<'a>(&'a self, owner: &'a str, name: &'a str) -> Lookup<'a> {
        Box::pin(async move {
            if let Some(s) = read_cached(&self.dir, owner, name)? {
                return Ok(Some(s));
            }
            match self.client.fetch_snapshot(owner, name).await {
                Ok(s) => {
                    save_snapshot(&s, &self.dir)?;
                    Ok(Some(s))
                }
                Err(FetchError::NotFound(_)) => Ok(None),
                Err(e) => Err(e.into()),
            }
        })
    }
}

pub type Clock = Arc<dyn Fn() -> Timestamp + Send + Sync>;

#[derive(Clone)]
pub struct AppState {
    model: Arc<RwLock<Option<Arc<ModelBundle>>>>,
    source: Arc<dyn SnapshotSource>,
    clock: Clock,
}

impl AppState {
    pub fn new(model: Option<ModelBundle>, source: Arc<dyn SnapshotSource>, clock: Clock) -> AppState {
        AppState {
            model: Arc::new(RwLock::new(model.map(Arc::new))),
            source,
            clock,
        }
    }

    pub fn model(&self) -> Option<Arc<ModelBundle>> {
        self.model.read().expect("model lock").clone()
    }

    /// Replaces the model; requests in flight keep the one they started with.
    pub fn swap_model(&self, model: Option<ModelBundle>) {
        *self.model.write().expect("model lock") = model.map(Arc::new);
    }
}

fn error(status: StatusCode, message: impl Into<String>) -> Response {
    (status, Json(json!({ "error": message.into() }))).into_response()
}

async fn status(State(st): State<AppState>, UrlPath((owner, repo)): UrlPath<(String, String)>) -> Response {
    let Some(model) = st.model() else {
        return error(StatusCode::SERVICE_UNAVAILABLE, "model not loaded");
    };
    let snapshot = match st.source.lookup(&owner, &repo).await {
        Ok(Some(s)) => s,
        Ok(None) => return error(StatusCode::NOT_FOUND, format!("unknown repository {owner}/{repo}")),
        Err(e @ CliError::Upstream(FetchError::RateLimited { .. })) => {
            return error(StatusCode::TOO_MANY_REQUESTS, e.to_string())
        }
        Err(e @ CliError::Upstream(_)) => return error(StatusCode::BAD_GATEWAY, e.to_string()),
        Err(e) => return error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
    };
    match badge_for(&snapshot, &model, (st.clock)()) {
        Ok(p) => Json(p).into_response(),
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
    }
}

async fn health(State(st): State<AppState>) -> Response {
    let model = st.model();
    Json(json!({
        "status": "ok",
        "model_loaded": model.is_some(),
        "model_version": model.map(|m| m.model_version.clone()),
    }))
    .into_response()
}

async fn not_found() -> Response {
    error(StatusCode::NOT_FOUND, "no such endpoint")
}

async fn cache_control(mut res: Response) -> Response {
    res.headers_mut()
        .insert(header::CACHE_CONTROL, HeaderValue::from_static(CACHE_CONTROL));
    res
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/v1/status/{owner}/{repo}", get(status))
        .route("/v1/health", get(health))
        .fallback(not_found)
        .with_state(state)
        .layer(axum::middleware::map_response(cache_control))
}

fn modified(path: &Path) -> Option<SystemTime> {
    std::fs::metadata(path).and_then(|m| m.modified()).ok()
}

/// Reloads the model whenever the file's modification time changes. A file
/// that fails to load leaves the current model in place.
pub fn watch_model(state: AppState, path: PathBuf, every: Duration) -> tokio::task::JoinHandle<()> {
    tokio::spawn(async move {
        let mut seen = modified(&path);
        let mut tick = tokio::time::interval(every);
        loop {
            tick.tick().await;
            let now = modified(&path);
            if now == seen {
                continue;
            }
            seen = now;
            match ModelBundle::load(&path) {
                Ok(m) => {
                    tracing::info!(version = %m.model_version, "model reloaded");
                    state.swap_model(Some(m));
                }
                Err(e) => tracing::warn!("keeping current model: {e}"),
            }
        }
    })
}
