//! Windowed temporal features.
//!
//! The last `n` months before an anchor are tiled into `n / m` intervals of
//! `m` months each (a month is 30 days). Each of the thirteen features is
//! measured once per interval, giving a `13 × k` grid of data points named
//! `<feature>_T<a>_<b>`, where interval 1 (`T1_m`) is the oldest.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::snapshot::RepoSnapshot;
use crate::time::{Timestamp, SECONDS_PER_DAY, SECONDS_PER_MONTH};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Scenario {
    pub length_months: u32,
    pub interval_months: u32,
}

impl Scenario {
    /// The ten window/interval combinations studied, in order.
    pub const ALL: [Scenario; 10] = [
        Scenario::raw(6, 3),
        Scenario::raw(6, 6),
        Scenario::raw(12, 3),
        Scenario::raw(12, 6),
        Scenario::raw(12, 12),
        Scenario::raw(18, 3),
        Scenario::raw(18, 6),
        Scenario::raw(24, 3),
        Scenario::raw(24, 6),
        Scenario::raw(24, 12),
    ];

    const fn raw(length_months: u32, interval_months: u32) -> Self {
        Scenario {
            length_months,
            interval_months,
        }
    }

    pub fn new(length_months: u32, interval_months: u32) -> Result<Self> {
        if ![6, 12, 18, 24].contains(&length_months) {
            return Err(Error::InvalidScenario(format!(
                "window length {length_months} not in {{6,12,18,24}}"
            )));
        }
        if ![3, 6, 12].contains(&interval_months) {
            return Err(Error::InvalidScenario(format!(
                "interval {interval_months} not in {{3,6,12}}"
            )));
        }
        if interval_months > length_months || length_months % interval_months != 0 {
            return Err(Error::InvalidScenario(format!(
                "interval {interval_months} does not divide window {length_months}"
            )));
        }
        Ok(Scenario::raw(length_months, interval_months))
    }

    pub fn intervals(&self) -> u32 {
        self.length_months / self.interval_months
    }

    pub fn data_points(&self) -> usize {
        Feature::ALL.len() * self.intervals() as usize
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.length_months, self.interval_months)
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (n, m) = s
            .split_once(',')
            .ok_or_else(|| Error::InvalidScenario(format!("expected `n,m`, got {s:?}")))?;
        let parse = |v: &str| {
            v.trim()
                .parse::<u32>()
                .map_err(|_| Error::InvalidScenario(format!("not an integer: {v:?}")))
        };
        Scenario::new(parse(n)?, parse(m)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Interval {
    /// 1-based; interval 1 is the oldest.
    pub index: u32,
    pub start_month: u32,
    pub end_month: u32,
    pub start: Timestamp,
    pub end: Timestamp,
}

impl Interval {
    pub fn tag(&self) -> String {
        format!("T{}_{}", self.start_month, self.end_month)
    }

    pub fn contains(&self, t: Timestamp) -> bool {
        self.start <= t && t < self.end
    }

    pub fn length_days(&self) -> u64 {
        (self.end.seconds_since(self.start) / SECONDS_PER_DAY) as u64
    }
}

/// Tiles the `n` months before `anchor` into `n / m` half-open intervals,
/// oldest first; the last interval ends exactly at `anchor`.
pub fn make_intervals(anchor: Timestamp, scenario: Scenario) -> Vec<Interval> {
    let k = scenario.intervals();
    let m = scenario.interval_months;
    (1..=k)
        .map(|i| {
            let months_before_end = i64::from((k - i) * m);
            let end = anchor.plus_seconds(-months_before_end * SECONDS_PER_MONTH);
            let start = end.plus_seconds(-i64::from(m) * SECONDS_PER_MONTH);
            Interval {
                index: i,
                start_month: (i - 1) * m + 1,
                end_month: i * m,
                start,
                end,
            }
        })
        .collect()
}

/// The thirteen activity features, in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Feature {
    Forks,
    OpenIssues,
    ClosedIssues,
    OpenPulls,
    ClosedPulls,
    MergedPulls,
    Commits,
    MaxDaysWithoutCommits,
    MaxContributionsByDeveloper,
    NewContributors,
    DistinctContributors,
    OwnerProjects,
    OwnerCommits,
}

impl Feature {
    pub const ALL: [Feature; 13] = [
        Feature::Forks,
        Feature::OpenIssues,
        Feature::ClosedIssues,
        Feature::OpenPulls,
        Feature::ClosedPulls,
        Feature::MergedPulls,
        Feature::Commits,
        Feature::MaxDaysWithoutCommits,
        Feature::MaxContributionsByDeveloper,
        Feature::NewContributors,
        Feature::DistinctContributors,
        Feature::OwnerProjects,
        Feature::OwnerCommits,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Feature::Forks => "forks",
            Feature::OpenIssues => "open_issues",
            Feature::ClosedIssues => "closed_issues",
            Feature::OpenPulls => "open_pulls",
            Feature::ClosedPulls => "closed_pulls",
            Feature::MergedPulls => "merged_pulls",
            Feature::Commits => "commits",
            Feature::MaxDaysWithoutCommits => "max_days_without_commits",
            Feature::MaxContributionsByDeveloper => "max_contributions_by_developer",
            Feature::NewContributors => "new_contributors",
            Feature::DistinctContributors => "distinct_contributors",
            Feature::OwnerProjects => "owner_projects",
            Feature::OwnerCommits => "owner_commits",
        }
    }

    pub fn index(self) -> usize {
        Feature::ALL.iter().position(|f| *f == self).unwrap()
    }
}

/// `<feature>_T<a>_<b>`.
pub fn data_point_name(feature: Feature, interval: &Interval) -> String {
    format!("{}_{}", feature.name(), interval.tag())
}

/// The interval tag of a data-point name (`commits_T22_24` → `T22_24`).
pub fn period_tag(name: &str) -> Option<&str> {
    let pos = name.rfind("_T")?;
    Some(&name[pos + 1..])
}

/// How the end of the feature window is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "at")]
pub enum AnchorPolicy {
    /// Window ends one second after the last commit, so the last commit falls
    /// inside the final half-open interval.
    #[default]
    LastCommit,
    /// Window ends at the snapshot's `fetched_at`.
    ObservedAt,
    /// Window ends at a fixed instant.
    At(Timestamp),
}

impl AnchorPolicy {
    pub fn resolve(self, s: &RepoSnapshot) -> Result<Timestamp> {
        match self {
            AnchorPolicy::LastCommit => s
                .last_commit()
                .map(|t| t.plus_seconds(1))
                .ok_or_else(|| Error::NoCommits(s.repo_id())),
            AnchorPolicy::ObservedAt => Ok(s.fetched_at),
            AnchorPolicy::At(t) => Ok(t),
        }
    }
}

impl FromStr for AnchorPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "last-commit" | "last_commit" => Ok(AnchorPolicy::LastCommit),
            "observed" | "observed-at" | "fetched" => Ok(AnchorPolicy::ObservedAt),
            other => Timestamp::parse(other)
                .map(AnchorPolicy::At)
                .map_err(|e| Error::InvalidConfig(format!("anchor: {e}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub repo_id: String,
    pub scenario: Scenario,
    pub intervals: Vec<Interval>,
    /// `values[feature][interval]`.
    pub values: Vec<Vec<f64>>,
}

impl FeatureMatrix {
    pub fn get(&self, feature: Feature, interval_index: u32) -> f64 {
        self.values[feature.index()][interval_index as usize - 1]
    }

    /// Data points in canonical order: feature order, then interval ascending.
    pub fn flatten(&self) -> DataPointVector {
        let mut names = Vec::with_capacity(self.values.len() * self.intervals.len());
        let mut values = Vec::with_capacity(names.capacity());
        for (f, feature) in Feature::ALL.iter().enumerate() {
            for (i, iv) in self.intervals.iter().enumerate() {
                names.push(data_point_name(*feature, iv));
                values.push(self.values[f][i]);
            }
        }
        DataPointVector { names, values }
    }
}

/// Ordered name → value pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct DataPointVector {
    pub names: Vec<String>,
    pub values: Vec<f64>,
}

impl DataPointVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|i| self.values[i])
    }

    /// Values reordered to `columns`; every column must be present.
    pub fn select(&self, columns: &[String]) -> Result<Vec<f64>> {
        let index: HashMap<&str, usize> =
            self.names.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
        columns
            .iter()
            .map(|c| {
                index
                    .get(c.as_str())
                    .map(|&i| self.values[i])
                    .ok_or_else(|| Error::ColumnMismatch(format!("missing data point {c}")))
            })
            .collect()
    }
}

/// Canonical data-point names for a scenario.
pub fn data_point_names(scenario: Scenario) -> Vec<String> {
    let intervals = make_intervals(Timestamp::from_unix(0), scenario);
    Feature::ALL
        .iter()
        .flat_map(|f| intervals.iter().map(move |iv| data_point_name(*f, iv)))
        .collect()
}

/// Longest stretch without commits inside `iv`, in whole days.
///
/// `commits` must be sorted and lie within the interval. The stretches are the
/// span from the interval start to the first commit, between consecutive
/// commits, and from the last commit to the interval end; with no commits the
/// whole interval counts.
pub fn max_gap_days(commits: &[Timestamp], iv: &Interval) -> u64 {
    let mut prev = iv.start;
    let mut longest = 0i64;
    for &t in commits {
        longest = longest.max(t.seconds_since(prev));
        prev = t;
    }
    longest = longest.max(iv.end.seconds_since(prev));
    (longest / SECONDS_PER_DAY) as u64
}

/// Builds the `13 × k` feature grid of `s` for `scenario`.
///
/// With no explicit `anchor` the window ends just after the last commit.
/// The first commit must be at least `n` months older than the anchor.
pub fn extract_features(
    s: &RepoSnapshot,
    scenario: Scenario,
    anchor: Option<Timestamp>,
) -> Result<FeatureMatrix> {
    let anchor = match anchor {
        Some(a) => a,
        None => AnchorPolicy::LastCommit.resolve(s)?,
    };
    let window_start = anchor.minus_months(i64::from(scenario.length_months));
    match s.first_commit() {
        Some(first) if first <= window_start => {}
        _ => {
            return Err(Error::InsufficientHistory {
                repo: s.repo_id(),
                needed_months: scenario.length_months,
                anchor: anchor.to_string(),
            })
        }
    }

    let intervals = make_intervals(anchor, scenario);
    let k = intervals.len();
    let mut values = vec![vec![0.0; k]; Feature::ALL.len()];

    let mut first_seen: HashMap<&str, Timestamp> = HashMap::new();
    for c in &s.commits {
        first_seen.entry(c.author_id.as_str()).or_insert(c.timestamp);
    }
    let owner_projects = s.owner_stats.latest_projects_created() as f64;
    let owner_commits = s.owner_stats.owner_commit_count as f64;

    for (i, iv) in intervals.iter().enumerate() {
        let mut set = |f: Feature, v: f64| values[f.index()][i] = v;
        let count = |it: &mut dyn Iterator<Item = Timestamp>| it.filter(|t| iv.contains(*t)).count() as f64;

        set(Feature::Forks, count(&mut s.forks.iter().map(|f| f.created_at)));
        set(Feature::OpenIssues, count(&mut s.issues.iter().map(|x| x.opened_at)));
        set(Feature::ClosedIssues, count(&mut s.issues.iter().filter_map(|x| x.closed_at)));
        set(Feature::OpenPulls, count(&mut s.pulls.iter().map(|x| x.opened_at)));
        set(Feature::ClosedPulls, count(&mut s.pulls.iter().filter_map(|x| x.closed_at)));
        set(Feature::MergedPulls, count(&mut s.pulls.iter().filter_map(|x| x.merged_at)));

        let lo = s.commits.partition_point(|c| c.timestamp < iv.start);
        let hi = s.commits.partition_point(|c| c.timestamp < iv.end);
        let in_interval = &s.commits[lo..hi];
        let stamps: Vec<Timestamp> = in_interval.iter().map(|c| c.timestamp).collect();
        let mut per_author: HashMap<&str, usize> = HashMap::new();
        for c in in_interval {
            *per_author.entry(c.author_id.as_str()).or_default() += 1;
        }
        let newcomers: HashSet<&str> = per_author
            .keys()
            .copied()
            .filter(|a| iv.contains(first_seen[a]))
            .collect();

        set(Feature::Commits, in_interval.len() as f64);
        set(Feature::MaxDaysWithoutCommits, max_gap_days(&stamps, iv) as f64);
        set(
            Feature::MaxContributionsByDeveloper,
            per_author.values().copied().max().unwrap_or(0) as f64,
        );
        set(Feature::NewContributors, newcomers.len() as f64);
        set(Feature::DistinctContributors, per_author.len() as f64);
        set(Feature::OwnerProjects, owner_projects);
        set(Feature::OwnerCommits, owner_commits);
    }

    Ok(FeatureMatrix {
        repo_id: s.repo_id(),
        scenario,
        intervals,
        values,
    })
}
