//! Assembling a [`RepoSnapshot`] from API payloads.

use repo_vitals::snapshot::{CommitEvent, ForkEvent, IssueEvent, OwnerKind, OwnerStats, PullEvent};
use repo_vitals::{RepoSnapshot, Timestamp};
use serde_json::Value;

use crate::client::GithubClient;
use crate::{FetchError, Result};

fn field<'a>(v: &'a Value, path: &[&str]) -> Option<&'a Value> {
    path.iter().try_fold(v, |v, k| v.get(k)).filter(|v| !v.is_null())
}

fn str_field<'a>(v: &'a Value, path: &[&str]) -> Option<&'a str> {
    field(v, path)?.as_str()
}

fn time_field(resource: &str, v: &Value, path: &[&str]) -> Result<Option<Timestamp>> {
    match str_field(v, path) {
        None => Ok(None),
        Some(s) => Timestamp::parse(s)
            .map(Some)
            .map_err(|e| FetchError::malformed(resource, format!("{}: {e}", path.join(".")))),
    }
}

fn required_time(resource: &str, v: &Value, path: &[&str]) -> Result<Timestamp> {
    time_field(resource, v, path)?
        .ok_or_else(|| FetchError::malformed(resource, format!("missing {}", path.join("."))))
}

fn login(v: &Value, key: &str) -> String {
    str_field(v, &[key, "login"]).unwrap_or("ghost").to_string()
}

fn parse_commit(v: &Value) -> Result<CommitEvent> {
    let timestamp = match time_field("commits", v, &["commit", "author", "date"])? {
        Some(t) => t,
        None => required_time("commits", v, &["commit", "committer", "date"])?,
    };
    let author_id = str_field(v, &["author", "login"])
        .or_else(|| str_field(v, &["commit", "author", "email"]))
        .or_else(|| str_field(v, &["commit", "author", "name"]))
        .unwrap_or("unknown")
        .to_string();
    Ok(CommitEvent { author_id, timestamp })
}

fn parse_issue(v: &Value) -> Result<IssueEvent> {
    Ok(IssueEvent {
        opened_at: required_time("issues", v, &["created_at"])?,
        closed_at: time_field("issues", v, &["closed_at"])?,
        author_id: login(v, "user"),
    })
}

fn parse_pull(v: &Value) -> Result<PullEvent> {
    let merged_at = time_field("pulls", v, &["merged_at"])?;
    Ok(PullEvent {
        opened_at: required_time("pulls", v, &["created_at"])?,
        // A merged pull request is closed at or before its merge.
        closed_at: time_field("pulls", v, &["closed_at"])?.or(merged_at),
        merged_at,
        author_id: login(v, "user"),
    })
}

fn names(items: &[Value], prefix: &str) -> Vec<String> {
    items
        .iter()
        .filter_map(|i| str_field(i, &["name"]))
        .map(|n| format!("{prefix}{n}"))
        .collect()
}

impl GithubClient {
    /// Fetches a snapshot stamped with the current time.
    pub async fn fetch_snapshot(&self, owner: &str, name: &str) -> Result<RepoSnapshot> {
        self.fetch_snapshot_at(owner, name, Timestamp::now()).await
    }

    /// Fetches a snapshot stamped `fetched_at`; events later than that are
    /// dropped.
    pub async fn fetch_snapshot_at(&self, owner: &str, name: &str, fetched_at: Timestamp) -> Result<RepoSnapshot> {
        let base = format!("/repos/{owner}/{name}");
        let repo = self.get_json(&base).await?;
        let owner_login = str_field(&repo, &["owner", "login"])
            .ok_or_else(|| FetchError::malformed(&base, "missing owner.login"))?
            .to_string();
        let owner_kind = match str_field(&repo, &["owner", "type"]) {
            Some("Organization") => OwnerKind::Organization,
            Some(_) => OwnerKind::User,
            None => return Err(FetchError::malformed(&base, "missing owner.type")),
        };
        let repo_name = str_field(&repo, &["name"]).unwrap_or(name).to_string();

        let commits = self
            .get_all(&format!("{base}/commits"))
            .await?
            .iter()
            .map(parse_commit)
            .collect::<Result<Vec<_>>>()?;
        let issues = self
            .get_all(&format!("{base}/issues?state=all"))
            .await?
            .iter()
            .filter(|i| i.get("pull_request").is_none())
            .map(parse_issue)
            .collect::<Result<Vec<_>>>()?;
        let pulls = self
            .get_all(&format!("{base}/pulls?state=all"))
            .await?
            .iter()
            .map(parse_pull)
            .collect::<Result<Vec<_>>>()?;
        let forks = self
            .get_all(&format!("{base}/forks"))
            .await?
            .iter()
            .map(|f| Ok(ForkEvent { created_at: required_time("forks", f, &["created_at"])? }))
            .collect::<Result<Vec<_>>>()?;
        let mut releases = Vec::new();
        for r in self.get_all(&format!("{base}/releases")).await? {
            if let Some(t) = time_field("releases", &r, &["published_at"])?
                .or(time_field("releases", &r, &["created_at"])?)
            {
                releases.push(t);
            }
        }
        let labels = names(&self.get_all(&format!("{base}/labels")).await?, "");
        let mut repo_files = names(&self.get_json_list_optional(&format!("{base}/contents/")).await?, "");
        repo_files.extend(names(
            &self.get_json_list_optional(&format!("{base}/contents/.github")).await?,
            ".github/",
        ));
        let readme_text = self.get_raw_optional(&format!("{base}/readme")).await?.unwrap_or_default();
        let user = self.get_json(&format!("/users/{owner_login}")).await?;
        let public_repos = field(&user, &["public_repos"]).and_then(Value::as_u64).unwrap_or(0);
        let owner_commit_count = commits.iter().filter(|c| c.author_id == owner_login).count() as u64;

        let mut s = RepoSnapshot {
            owner_login,
            repo_name,
            owner_kind,
            primary_language: str_field(&repo, &["language"]).unwrap_or("").to_string(),
            domain_label: None,
            star_count: field(&repo, &["stargazers_count"]).and_then(Value::as_u64).unwrap_or(0),
            size_loc: 0,
            commits,
            issues,
            pulls,
            forks,
            releases,
            owner_stats: OwnerStats {
                projects_created: vec![public_repos],
                owner_commit_count,
            },
            repo_files,
            labels,
            homepage_url: str_field(&repo, &["homepage"]).filter(|h| !h.is_empty()).map(String::from),
            readme_text,
            fetched_at,
        };
        s = s.as_of(fetched_at);
        s.fetched_at = fetched_at;
        s.canonicalize();
        s.validate().map_err(|e| FetchError::malformed(&base, e.to_string()))?;
        Ok(s)
    }

    async fn get_json_list_optional(&self, path: &str) -> Result<Vec<Value>> {
        match self.get_json(path).await {
            Ok(Value::Array(v)) => Ok(v),
            Ok(_) => Ok(Vec::new()),
            Err(FetchError::NotFound(_)) => Ok(Vec::new()),
            Err(e) => Err(e),
        }
    }

    /// Fetches several repositories with at most `concurrency` in flight.
    /// Results keep the input order.
    pub async fn fetch_many(
        &self,
        repos: &[(String, String)],
        concurrency: usize,
        fetched_at: Timestamp,
    ) -> Vec<Result<RepoSnapshot>> {
        let permits = std::sync::Arc::new(tokio::sync::Semaphore::new(concurrency.max(1)));
        let mut set = tokio::task::JoinSet::new();
        for (i, (owner, name)) in repos.iter().cloned().enumerate() {
            let client = self.clone();
            let permits = permits.clone();
            set.spawn(async move {
                let _permit = permits.acquire_owned().await.expect("semaphore open");
                (i, client.fetch_snapshot_at(&owner, &name, fetched_at).await)
            });
        }
        let mut out: Vec<Option<Result<RepoSnapshot>>> = repos.iter().map(|_| None).collect();
        while let Some(joined) = set.join_next().await {
            match joined {
                Ok((i, r)) => out[i] = Some(r),
                Err(e) => warn_join(e),
            }
        }
        out.into_iter()
            .zip(repos)
            .map(|(r, (o, n))| {
                r.unwrap_or_else(|| {
                    Err(FetchError::Transport {
                        resource: format!("{o}/{n}"),
                        reason: "fetch task failed".into(),
                    })
                })
            })
            .collect()
    }
}

fn warn_join(e: tokio::task::JoinError) {
    tracing::warn!(error = %e, "fetch task failed");
}
