use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use axum::extract::{Query, State};
use axum::http::{HeaderMap, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use repo_vitals::Timestamp;
use repo_vitals_github::{ClientConfig, FetchError, GithubClient};
use serde_json::{json, Value};

#[derive(Clone, Default)]
struct Mock {
    base: Arc<std::sync::OnceLock<String>>,
    hits: Arc<AtomicUsize>,
    flaky_left: Arc<AtomicUsize>,
    limited_left: Arc<AtomicUsize>,
    auth_seen: Arc<std::sync::Mutex<Vec<String>>>,
}

fn commit(login: &str, date: &str) -> Value {
    json!({"author": {"login": login}, "commit": {"author": {"date": date, "email": "x@y"}}})
}

async fn repo(State(m): State<Mock>, headers: HeaderMap) -> Response {
    m.hits.fetch_add(1, Ordering::SeqCst);
    if let Some(a) = headers.get("authorization") {
        m.auth_seen.lock().unwrap().push(a.to_str().unwrap().to_string());
    }
    if m.flaky_left.load(Ordering::SeqCst) > 0 {
        m.flaky_left.fetch_sub(1, Ordering::SeqCst);
        return StatusCode::BAD_GATEWAY.into_response();
    }
    if m.limited_left.load(Ordering::SeqCst) > 0 {
        m.limited_left.fetch_sub(1, Ordering::SeqCst);
        let reset = SystemTime::now().duration_since(UNIX_EPOCH).unwrap().as_secs() + 1;
        let mut resp = (StatusCode::FORBIDDEN, "API rate limit exceeded").into_response();
        resp.headers_mut().insert("x-ratelimit-remaining", HeaderValue::from_static("0"));
        resp.headers_mut().insert("x-ratelimit-reset", HeaderValue::from_str(&reset.to_string()).unwrap());
        return resp;
    }
    Json(json!({
        "name": "proj",
        "owner": {"login": "octo", "type": "Organization"},
        "language": "Rust",
        "stargazers_count": 42,
        "homepage": "https://proj.example.org",
    }))
    .into_response()
}

async fn commits(State(m): State<Mock>, Query(q): Query<std::collections::HashMap<String, String>>) -> Response {
    assert_eq!(q.get("per_page").map(String::as_str), Some("2"));
    let page: usize = q.get("page").and_then(|p| p.parse().ok()).unwrap_or(1);
    let all = [
        commit("octo", "2016-01-01T00:00:00Z"),
        commit("dev", "2016-03-01T00:00:00Z"),
        commit("dev", "2017-03-01T00:00:00+02:00"),
        commit("octo", "2018-06-01T12:00:00Z"),
        commit("dev", "2018-07-01T00:00:00Z"),
    ];
    let chunk: Vec<Value> = all.iter().skip((page - 1) * 2).take(2).cloned().collect();
    let mut resp = Json(chunk).into_response();
    if page * 2 < all.len() {
        let next = format!(
            "<{}/repos/octo/proj/commits?per_page=2&page={}>; rel=\"next\", <{}/x>; rel=\"last\"",
            m.base.get().unwrap(),
            page + 1,
            m.base.get().unwrap()
        );
        resp.headers_mut().insert("link", HeaderValue::from_str(&next).unwrap());
    }
    resp
}

async fn issues() -> Json<Value> {
    Json(json!([
        {"created_at": "2017-01-01T00:00:00Z", "closed_at": "2017-01-05T00:00:00Z", "user": {"login": "u1"}},
        {"created_at": "2017-02-01T00:00:00Z", "closed_at": null, "user": {"login": "u2"}},
        {"created_at": "2017-02-02T00:00:00Z", "closed_at": null, "user": {"login": "u3"}, "pull_request": {}},
    ]))
}

async fn pulls() -> Json<Value> {
    Json(json!([
        {"created_at": "2017-02-02T00:00:00Z", "closed_at": "2017-02-03T00:00:00Z", "merged_at": "2017-02-03T00:00:00Z", "user": {"login": "u3"}},
    ]))
}

async fn empty() -> Json<Value> {
    Json(json!([]))
}

async fn labels() -> Json<Value> {
    Json(json!([{"name": "bug"}, {"name": "good first issue"}]))
}

async fn contents() -> Json<Value> {
    Json(json!([{"name": "README.md"}, {"name": "LICENSE"}, {"name": ".travis.yml"}]))
}

async fn dot_github() -> Json<Value> {
    Json(json!([{"name": "CONTRIBUTING.md"}]))
}

async fn readme(headers: HeaderMap) -> Response {
    assert_eq!(headers.get("accept").unwrap(), "application/vnd.github.raw");
    "# proj\nThis project is deprecated.\n".into_response()
}

async fn user() -> Json<Value> {
    Json(json!({"public_repos": 17}))
}

async fn serve(mock: Mock) -> String {
    let app = Router::new()
        .route("/repos/octo/proj", get(repo))
        .route("/repos/octo/proj/commits", get(commits))
        .route("/repos/octo/proj/issues", get(issues))
        .route("/repos/octo/proj/pulls", get(pulls))
        .route("/repos/octo/proj/forks", get(empty))
        .route("/repos/octo/proj/releases", get(empty))
        .route("/repos/octo/proj/labels", get(labels))
        .route("/repos/octo/proj/contents/", get(contents))
        .route("/repos/octo/proj/contents/.github", get(dot_github))
        .route("/repos/octo/proj/readme", get(readme))
        .route("/users/octo", get(user))
        .with_state(mock.clone());
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let base = format!("http://{}", listener.local_addr().unwrap());
    mock.base.set(base.clone()).unwrap();
    tokio::spawn(async move { axum::serve(listener, app).await.unwrap() });
    base
}

fn client(base: &str) -> GithubClient {
    GithubClient::new(ClientConfig {
        base_url: base.into(),
        token: Some("secret".into()),
        per_page: 2,
        max_attempts: 3,
        backoff_base: Duration::from_millis(10),
        ..ClientConfig::default()
    })
    .unwrap()
}

#[tokio::test]
async fn builds_snapshot_across_pages() {
    let mock = Mock::default();
    let base = serve(mock.clone()).await;
    let at = Timestamp::parse("2018-11-01T00:00:00Z").unwrap();
    let s = client(&base).fetch_snapshot_at("octo", "proj", at).await.unwrap();
    assert_eq!(s.repo_id(), "octo/proj");
    assert_eq!(s.commits.len(), 5);
    assert_eq!(s.commits[2].timestamp.to_string(), "2017-02-28T22:00:00Z");
    assert_eq!(s.issues.len(), 2, "pull requests are not issues");
    assert_eq!(s.pulls.len(), 1);
    assert_eq!(s.owner_stats.projects_created, [17]);
    assert_eq!(s.owner_stats.owner_commit_count, 2);
    assert_eq!(s.repo_files, [".github/CONTRIBUTING.md", ".travis.yml", "LICENSE", "README.md"]);
    assert!(s.readme_text.contains("deprecated"));
    assert_eq!(s.fetched_at, at);
    assert_eq!(mock.auth_seen.lock().unwrap()[0], "token secret");
    s.validate().unwrap();

    let again = client(&base).fetch_snapshot_at("octo", "proj", at).await.unwrap();
    assert_eq!(s.to_json().unwrap(), again.to_json().unwrap());
}

#[tokio::test]
async fn retries_server_errors() {
    let mock = Mock::default();
    mock.flaky_left.store(2, Ordering::SeqCst);
    let base = serve(mock.clone()).await;
    client(&base).fetch_snapshot_at("octo", "proj", Timestamp::now()).await.unwrap();
    assert_eq!(mock.hits.load(Ordering::SeqCst), 3);

    mock.flaky_left.store(5, Ordering::SeqCst);
    let err = client(&base).fetch_snapshot("octo", "proj").await.unwrap_err();
    assert!(matches!(err, FetchError::Transport { .. }), "{err}");
}

#[tokio::test]
async fn waits_for_rate_limit_reset() {
    let mock = Mock::default();
    mock.limited_left.store(1, Ordering::SeqCst);
    let base = serve(mock.clone()).await;
    let started = std::time::Instant::now();
    client(&base).fetch_snapshot("octo", "proj").await.unwrap();
    assert!(started.elapsed() >= Duration::from_millis(10));
    assert_eq!(mock.hits.load(Ordering::SeqCst), 2);

    mock.limited_left.store(10, Ordering::SeqCst);
    let err = client(&base).fetch_snapshot("octo", "proj").await.unwrap_err();
    assert!(matches!(err, FetchError::RateLimited { attempts: 3, .. }), "{err}");
}

#[tokio::test]
async fn missing_repo_is_not_found() {
    let base = serve(Mock::default()).await;
    let err = client(&base).fetch_snapshot("nonexistent-xyz", "nope").await.unwrap_err();
    assert!(matches!(err, FetchError::NotFound(_)), "{err}");
}

#[tokio::test]
async fn fetch_many_keeps_order() {
    let base = serve(Mock::default()).await;
    let repos = vec![
        ("octo".to_string(), "proj".to_string()),
        ("ghost".to_string(), "none".to_string()),
        ("octo".to_string(), "proj".to_string()),
    ];
    let out = client(&base).fetch_many(&repos, 2, Timestamp::now()).await;
    assert!(out[0].is_ok());
    assert!(matches!(out[1], Err(FetchError::NotFound(_))));
    assert!(out[2].is_ok());
}
