//! Canonical repository snapshots, their on-disk format, and corpora.
//!
//! A snapshot is one JSON document per repository, versioned by a top-level
//! `"schema": 1` field and named `<owner>__<name>.snapshot.json`. A corpus is
//! a directory of snapshots plus an optional `manifest.csv` (`owner,name,label`)
//! carrying ground-truth labels.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::time::Timestamp;

pub const SNAPSHOT_SCHEMA: u32 = 1;
pub const SNAPSHOT_SUFFIX: &str = ".snapshot.json";
pub const MANIFEST_FILE: &str = "manifest.csv";
/// Superseded snapshots are moved here when a newer fetch is saved.
pub const HISTORY_DIR: &str = "history";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OwnerKind {
    User,
    Organization,
}

impl OwnerKind {
    pub fn as_str(self) -> &'static str {
        match self {
            OwnerKind::User => "user",
            OwnerKind::Organization => "organization",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommitEvent {
    pub author_id: String,
    pub timestamp: Timestamp,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IssueEvent {
    pub opened_at: Timestamp,
    pub closed_at: Option<Timestamp>,
    pub author_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PullEvent {
    pub opened_at: Timestamp,
    pub closed_at: Option<Timestamp>,
    pub merged_at: Option<Timestamp>,
    pub author_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForkEvent {
    pub created_at: Timestamp,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct OwnerStats {
    /// Projects created by the owner, sampled at snapshot time. Only the last
    /// sample is used; the value is replicated across feature intervals.
    pub projects_created: Vec<u64>,
    pub owner_commit_count: u64,
}

impl OwnerStats {
    pub fn latest_projects_created(&self) -> u64 {
        self.projects_created.last().copied().unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepoSnapshot {
    pub owner_login: String,
    pub repo_name: String,
    pub owner_kind: OwnerKind,
    pub primary_language: String,
    #[serde(default)]
    pub domain_label: Option<String>,
    pub star_count: u64,
    pub size_loc: u64,
    pub commits: Vec<CommitEvent>,
    pub issues: Vec<IssueEvent>,
    pub pulls: Vec<PullEvent>,
    pub forks: Vec<ForkEvent>,
    pub releases: Vec<Timestamp>,
    pub owner_stats: OwnerStats,
    pub repo_files: Vec<String>,
    pub labels: Vec<String>,
    #[serde(default)]
    pub homepage_url: Option<String>,
    pub readme_text: String,
    pub fetched_at: Timestamp,
}

#[derive(Serialize)]
struct SnapshotDocRef<'a> {
    schema: u32,
    #[serde(flatten)]
    snapshot: &'a RepoSnapshot,
}

#[derive(Deserialize)]
struct SnapshotDoc {
    schema: u32,
    #[serde(flatten)]
    snapshot: RepoSnapshot,
}

impl RepoSnapshot {
    /// `owner/name`.
    pub fn repo_id(&self) -> String {
        format!("{}/{}", self.owner_login, self.repo_name)
    }

    pub fn file_name(&self) -> String {
        snapshot_file_name(&self.owner_login, &self.repo_name)
    }

    pub fn first_commit(&self) -> Option<Timestamp> {
        self.commits.first().map(|c| c.timestamp)
    }

    pub fn last_commit(&self) -> Option<Timestamp> {
        self.commits.last().map(|c| c.timestamp)
    }

    /// Sorts every event list into its canonical order.
    pub fn canonicalize(&mut self) {
        self.commits
            .sort_by(|a, b| (a.timestamp, &a.author_id).cmp(&(b.timestamp, &b.author_id)));
        self.issues.sort_by(|a, b| {
            (a.opened_at, a.closed_at, &a.author_id).cmp(&(b.opened_at, b.closed_at, &b.author_id))
        });
        self.pulls.sort_by(|a, b| {
            (a.opened_at, a.closed_at, a.merged_at, &a.author_id).cmp(&(
                b.opened_at,
                b.closed_at,
                b.merged_at,
                &b.author_id,
            ))
        });
        self.forks.sort_by_key(|f| f.created_at);
        self.releases.sort();
        self.repo_files.sort();
        self.repo_files.dedup();
        self.labels.sort();
        self.labels.dedup();
    }

    /// Checks the snapshot invariants; the error names the offending field.
    pub fn validate(&self) -> Result<()> {
        let ctx = self.repo_id();
        let bad = |field: String, reason: String| Err(Error::malformed(ctx.clone(), field, reason));
        let after_fetch = |t: Timestamp| t > self.fetched_at;

        if self.owner_login.is_empty() || self.repo_name.is_empty() {
            return bad("owner_login/repo_name".into(), "must be non-empty".into());
        }
        for (i, pair) in self.commits.windows(2).enumerate() {
            if pair[1].timestamp < pair[0].timestamp {
                return bad(format!("commits[{}]", i + 1), "commits not sorted ascending".into());
            }
        }
        for (i, c) in self.commits.iter().enumerate() {
            if after_fetch(c.timestamp) {
                return bad(format!("commits[{i}].timestamp"), "after fetched_at".into());
            }
        }
        for (i, issue) in self.issues.iter().enumerate() {
            check_span(
                &ctx,
                &format!("issues[{i}]"),
                issue.opened_at,
                issue.closed_at,
                None,
                self.fetched_at,
            )?;
        }
        for (i, pull) in self.pulls.iter().enumerate() {
            check_span(
                &ctx,
                &format!("pulls[{i}]"),
                pull.opened_at,
                pull.closed_at,
                pull.merged_at,
                self.fetched_at,
            )?;
        }
        for (i, fork) in self.forks.iter().enumerate() {
            if after_fetch(fork.created_at) {
                return bad(format!("forks[{i}].created_at"), "after fetched_at".into());
            }
        }
        for (i, r) in self.releases.iter().enumerate() {
            if after_fetch(*r) {
                return bad(format!("releases[{i}]"), "after fetched_at".into());
            }
        }
        Ok(())
    }

    /// The state of the repository as it was at `date`: every event later than
    /// `date` is dropped and `fetched_at` becomes `date`.
    pub fn as_of(&self, date: Timestamp) -> RepoSnapshot {
        let keep = |t: Timestamp| t <= date;
        let clip = |t: Option<Timestamp>| t.filter(|t| keep(*t));
        let mut s = self.clone();
        s.commits.retain(|c| keep(c.timestamp));
        s.issues.retain(|i| keep(i.opened_at));
        for issue in &mut s.issues {
            issue.closed_at = clip(issue.closed_at);
        }
        s.pulls.retain(|p| keep(p.opened_at));
        for pull in &mut s.pulls {
            pull.closed_at = clip(pull.closed_at);
            pull.merged_at = clip(pull.merged_at);
            if pull.closed_at.is_none() {
                pull.merged_at = None;
            }
        }
        s.forks.retain(|f| keep(f.created_at));
        s.releases.retain(|r| keep(*r));
        s.fetched_at = date.min(self.fetched_at);
        s
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = SnapshotDocRef {
            schema: SNAPSHOT_SCHEMA,
            snapshot: self,
        };
        let mut text = serde_json::to_string_pretty(&doc).map_err(|source| Error::Json {
            context: self.repo_id(),
            source,
        })?;
        text.push('\n');
        Ok(text)
    }

    pub fn from_json(text: &str, context: &str) -> Result<RepoSnapshot> {
        let doc: SnapshotDoc = serde_json::from_str(text).map_err(|source| Error::Json {
            context: context.to_string(),
            source,
        })?;
        if doc.schema != SNAPSHOT_SCHEMA {
            return Err(Error::malformed(
                context,
                "schema",
                format!("unsupported schema {}", doc.schema),
            ));
        }
        doc.snapshot.validate().map_err(|e| match e {
            Error::Malformed { field, reason, .. } => Error::Malformed {
                context: context.to_string(),
                field,
                reason,
            },
            other => other,
        })?;
        Ok(doc.snapshot)
    }
}

fn check_span(
    ctx: &str,
    what: &str,
    opened: Timestamp,
    closed: Option<Timestamp>,
    merged: Option<Timestamp>,
    fetched_at: Timestamp,
) -> Result<()> {
    if opened > fetched_at {
        return Err(Error::malformed(ctx, format!("{what}.opened_at"), "after fetched_at"));
    }
    if let Some(c) = closed {
        if c < opened {
            return Err(Error::malformed(
                ctx,
                format!("{what}.closed_at"),
                format!("closed_at {c} precedes opened_at {opened}"),
            ));
        }
        if c > fetched_at {
            return Err(Error::malformed(ctx, format!("{what}.closed_at"), "after fetched_at"));
        }
    }
    if let Some(m) = merged {
        match closed {
            None => {
                return Err(Error::malformed(
                    ctx,
                    format!("{what}.merged_at"),
                    "merged_at without closed_at",
                ))
            }
            Some(_) if m < opened => {
                return Err(Error::malformed(
                    ctx,
                    format!("{what}.merged_at"),
                    "merged_at precedes opened_at",
                ))
            }
            _ => {}
        }
    }
    Ok(())
}

pub fn snapshot_file_name(owner: &str, name: &str) -> String {
    format!("{owner}__{name}{SNAPSHOT_SUFFIX}")
}

/// Writes `s` to `<dir>/<owner>__<name>.snapshot.json`.
///
/// Snapshot files are never rewritten in place: if a snapshot with a different
/// `fetched_at` already occupies the name, it is first moved to
/// `<dir>/history/<owner>__<name>@<fetched_at>.snapshot.json`.
pub fn save_snapshot(s: &RepoSnapshot, dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join(s.file_name());
    let text = s.to_json()?;
    if path.exists() {
        let previous = load_snapshot(&path)?;
        if previous == *s {
            return Ok(path);
        }
        if previous.fetched_at != s.fetched_at {
            let history = dir.join(HISTORY_DIR);
            fs::create_dir_all(&history).map_err(|e| Error::io(&history, e))?;
            let stamp = previous.fetched_at.to_datetime().format("%Y%m%dT%H%M%SZ");
            let archived = history.join(format!(
                "{}__{}@{stamp}{SNAPSHOT_SUFFIX}",
                previous.owner_login, previous.repo_name
            ));
            fs::rename(&path, &archived).map_err(|e| Error::io(&archived, e))?;
        }
    }
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

pub fn load_snapshot(path: &Path) -> Result<RepoSnapshot> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    RepoSnapshot::from_json(&text, &path.display().to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Active,
    Unmaintained,
    Unlabeled,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Active => "active",
            Label::Unmaintained => "unmaintained",
            Label::Unlabeled => "unlabeled",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "active" => Ok(Label::Active),
            "unmaintained" => Ok(Label::Unmaintained),
            "" | "unlabeled" => Ok(Label::Unlabeled),
            other => Err(format!("unknown label {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusEntry {
    pub snapshot: RepoSnapshot,
    pub label: Label,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Corpus {
    pub entries: Vec<CorpusEntry>,
}

impl Corpus {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn find(&self, owner: &str, name: &str) -> Option<&CorpusEntry> {
        self.entries
            .iter()
            .find(|e| e.snapshot.owner_login == owner && e.snapshot.repo_name == name)
    }

    /// Writes every snapshot and a manifest into `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        for entry in &self.entries {
            save_snapshot(&entry.snapshot, dir)?;
        }
        save_manifest(self, &dir.join(MANIFEST_FILE))
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct ManifestRow {
    owner: String,
    name: String,
    label: String,
}

pub fn save_manifest(corpus: &Corpus, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|source| Error::Csv {
        context: path.display().to_string(),
        source,
    })?;
    for e in &corpus.entries {
        w.serialize(ManifestRow {
            owner: e.snapshot.owner_login.clone(),
            name: e.snapshot.repo_name.clone(),
            label: e.label.to_string(),
        })
        .map_err(|source| Error::Csv {
            context: path.display().to_string(),
            source,
        })?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn read_manifest(path: &Path) -> Result<Vec<(String, String, Label)>> {
    let ctx = path.display().to_string();
    let mut r = csv::Reader::from_path(path).map_err(|source| Error::Csv {
        context: ctx.clone(),
        source,
    })?;
    let headers = r
        .headers()
        .map_err(|source| Error::Csv {
            context: ctx.clone(),
            source,
        })?
        .clone();
    if headers.iter().collect::<Vec<_>>() != ["owner", "name", "label"] {
        return Err(Error::malformed(ctx, "header", "expected `owner,name,label`"));
    }
    let mut rows = Vec::new();
    for (line, record) in r.deserialize::<ManifestRow>().enumerate() {
        let row = record.map_err(|source| Error::Csv {
            context: ctx.clone(),
            source,
        })?;
        let label = row
            .label
            .parse::<Label>()
            .map_err(|reason| Error::malformed(&ctx, format!("row {}.label", line + 2), reason))?;
        rows.push((row.owner, row.name, label));
    }
    Ok(rows)
}

/// Loads a corpus from a snapshot directory or from a manifest file.
///
/// Given a directory, every top-level `*.snapshot.json` is loaded in file-name
/// order and labels come from `manifest.csv` when present (missing entries
/// are unlabeled). Given a manifest, exactly the listed repositories are
/// loaded from the manifest's directory, in manifest order.
pub fn load_corpus(path: &Path) -> Result<Corpus> {
    if path.is_dir() {
        let mut files = Vec::new();
        for entry in fs::read_dir(path).map_err(|e| Error::io(path, e))? {
            let entry = entry.map_err(|e| Error::io(path, e))?;
            let p = entry.path();
            let is_snapshot = p
                .file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.ends_with(SNAPSHOT_SUFFIX));
            if is_snapshot && p.is_file() {
                files.push(p);
            }
        }
        files.sort();
        let manifest_path = path.join(MANIFEST_FILE);
        let labels = if manifest_path.exists() {
            read_manifest(&manifest_path)?
        } else {
            Vec::new()
        };
        let mut entries = Vec::with_capacity(files.len());
        for file in files {
            let snapshot = load_snapshot(&file)?;
            let label = labels
                .iter()
                .find(|(o, n, _)| *o == snapshot.owner_login && *n == snapshot.repo_name)
                .map(|(_, _, l)| *l)
                .unwrap_or(Label::Unlabeled);
            entries.push(CorpusEntry { snapshot, label });
        }
        Ok(Corpus { entries })
    } else {
        let dir = path.parent().unwrap_or_else(|| Path::new("."));
        let mut entries = Vec::new();
        for (owner, name, label) in read_manifest(path)? {
            let snapshot = load_snapshot(&dir.join(snapshot_file_name(&owner, &name)))?;
            entries.push(CorpusEntry { snapshot, label });
        }
        Ok(Corpus { entries })
    }
}
