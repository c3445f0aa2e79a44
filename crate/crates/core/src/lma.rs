//! Level of maintenance activity: an affine rescaling of the active-vote
//! share, quartile-based levels, and series over past dates.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{extract_features, Scenario};
use crate::forest::{Forest, Prediction};
use crate::snapshot::{CommitEvent, RepoSnapshot};
use crate::stats::quantile;
use crate::time::{Timestamp, SECONDS_PER_DAY};
use crate::Class;

/// Days between consecutive points of a historical series.
pub const SERIES_SPACING_DAYS: i64 = 90;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LmaValue {
    pub value: f64,
    pub p_active: f64,
}

impl LmaValue {
    /// `2·(p − 0.5)·100`; defined only for `p ≥ 0.5`.
    pub fn from_p_active(p_active: f64) -> Result<LmaValue> {
        if !(0.5..=1.0).contains(&p_active) {
            return Err(Error::UnmaintainedProject { p_active });
        }
        Ok(LmaValue {
            value: 2.0 * (p_active - 0.5) * 100.0,
            p_active,
        })
    }

    /// Inverse of the affine map.
    pub fn p_from_value(value: f64) -> f64 {
        value / 200.0 + 0.5
    }
}

pub fn lma_from_prediction(pred: &Prediction) -> Result<LmaValue> {
    LmaValue::from_p_active(pred.p_active)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Level {
    NotAnalysed,
    Unmaintained,
    Borderline,
    Fair,
    High,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Color {
    Green,
    Yellow,
    Orange,
    Red,
    Grey,
}

impl Level {
    pub const ALL: [Level; 5] = [
        Level::High,
        Level::Fair,
        Level::Borderline,
        Level::Unmaintained,
        Level::NotAnalysed,
    ];

    pub fn color(self) -> Color {
        match self {
            Level::High => Color::Green,
            Level::Fair => Color::Yellow,
            Level::Borderline => Color::Orange,
            Level::Unmaintained => Color::Red,
            Level::NotAnalysed => Color::Grey,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Level::High => "high",
            Level::Fair => "fair",
            Level::Borderline => "borderline",
            Level::Unmaintained => "unmaintained",
            Level::NotAnalysed => "not_analysed",
        }
    }
}

impl Color {
    pub fn as_str(self) -> &'static str {
        match self {
            Color::Green => "green",
            Color::Yellow => "yellow",
            Color::Orange => "orange",
            Color::Red => "red",
            Color::Grey => "grey",
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Display for Color {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// First, second and third quartiles of a reference set of LMA values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quartiles {
    pub q1: f64,
    pub q2: f64,
    pub q3: f64,
}

impl Quartiles {
    pub fn new(q1: f64, q2: f64, q3: f64) -> Result<Quartiles> {
        if !(q1 <= q2 && q2 <= q3) {
            return Err(Error::InvalidConfig(format!(
                "quartiles must be ordered, got ({q1}, {q2}, {q3})"
            )));
        }
        Ok(Quartiles { q1, q2, q3 })
    }

    /// Type-7 quartiles of `values`.
    pub fn from_values(values: &[f64]) -> Result<Quartiles> {
        if values.is_empty() {
            return Err(Error::EmptySample);
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        Ok(Quartiles {
            q1: quantile(&sorted, 0.25),
            q2: quantile(&sorted, 0.5),
            q3: quantile(&sorted, 0.75),
        })
    }
}

/// What is known about one repository at one date.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum LmaStatus {
    Active(LmaValue),
    Unmaintained,
    NotAnalysed,
}

impl LmaStatus {
    pub fn from_prediction(pred: &Prediction) -> LmaStatus {
        match pred.label {
            Class::Active => LmaStatus::Active(
                lma_from_prediction(pred).expect("active predictions have p_active ≥ 0.5"),
            ),
            Class::Unmaintained => LmaStatus::Unmaintained,
        }
    }

    pub fn lma(&self) -> Option<f64> {
        match self {
            LmaStatus::Active(v) => Some(v.value),
            _ => None,
        }
    }
}

/// Band of an LMA value; a value equal to a quartile falls in the lower band.
pub fn level_of(status: &LmaStatus, q: &Quartiles) -> Level {
    match status {
        LmaStatus::Active(v) if v.value > q.q3 => Level::High,
        LmaStatus::Active(v) if v.value > q.q1 => Level::Fair,
        LmaStatus::Active(_) => Level::Borderline,
        LmaStatus::Unmaintained => Level::Unmaintained,
        LmaStatus::NotAnalysed => Level::NotAnalysed,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesPoint {
    pub date: Timestamp,
    pub status: LmaStatus,
    /// Why the point could not be computed, for `NotAnalysed` points.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gap: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LmaSeries {
    pub repo_id: String,
    pub points: Vec<SeriesPoint>,
}

/// `count` dates spaced 90 days apart, the last one being `end`.
pub fn evaluation_dates(end: Timestamp, count: usize) -> Vec<Timestamp> {
    (0..count)
        .rev()
        .map(|k| end.plus_days(-(k as i64) * SERIES_SPACING_DAYS))
        .collect()
}

fn check_spacing(dates: &[Timestamp]) -> Result<()> {
    for w in dates.windows(2) {
        if w[1].seconds_since(w[0]) != SERIES_SPACING_DAYS * SECONDS_PER_DAY {
            return Err(Error::InvalidConfig(format!(
                "series dates {} and {} are not {SERIES_SPACING_DAYS} days apart",
                w[0], w[1]
            )));
        }
    }
    Ok(())
}

/// Classifies each dated state with features anchored at its date. A state
/// with too little history becomes a `NotAnalysed` gap.
pub fn historical_series(
    repo_id: &str,
    states: &[(Timestamp, RepoSnapshot)],
    forest: &Forest,
    scenario: Scenario,
) -> Result<LmaSeries> {
    let dates: Vec<Timestamp> = states.iter().map(|s| s.0).collect();
    check_spacing(&dates)?;
    let points = states
        .iter()
        .map(|(date, state)| match extract_features(state, scenario, Some(*date)) {
            Ok(fm) => {
                let dp = fm.flatten();
                let pred = forest.predict_named(&dp.names, &dp.values)?;
                Ok(SeriesPoint {
                    date: *date,
                    status: LmaStatus::from_prediction(&pred),
                    gap: None,
                })
            }
            Err(e @ (Error::InsufficientHistory { .. } | Error::NoCommits(_))) => Ok(SeriesPoint {
                date: *date,
                status: LmaStatus::NotAnalysed,
                gap: Some(e.to_string()),
            }),
            Err(e) => Err(e),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LmaSeries {
        repo_id: repo_id.to_string(),
        points,
    })
}

/// Series for one snapshot, replaying it as it was at each date.
pub fn series_from_snapshot(
    s: &RepoSnapshot,
    dates: &[Timestamp],
    forest: &Forest,
    scenario: Scenario,
) -> Result<LmaSeries> {
    let states: Vec<(Timestamp, RepoSnapshot)> = dates.iter().map(|&d| (d, s.as_of(d))).collect();
    historical_series(&s.repo_id(), &states, forest, scenario)
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuartileMode {
    /// Quartiles of the active population at each date.
    #[default]
    PerDate,
    /// One fixed set of quartiles for every date.
    Frozen(Quartiles),
}

/// Levels for a population of aligned series (same dates), one row per date.
/// Dates with no active repository under `PerDate` leave active repos
/// `NotAnalysed`.
pub fn population_levels(series: &[LmaSeries], mode: QuartileMode) -> Result<Vec<Vec<Level>>> {
    let Some(first) = series.first() else {
        return Ok(Vec::new());
    };
    let n_dates = first.points.len();
    for s in series {
        let same = s.points.len() == n_dates
            && s.points.iter().zip(&first.points).all(|(a, b)| a.date == b.date);
        if !same {
            return Err(Error::InvalidConfig(format!(
                "series for {} is not aligned with {}",
                s.repo_id, first.repo_id
            )));
        }
    }
    (0..n_dates)
        .map(|d| {
            let q = match mode {
                QuartileMode::Frozen(q) => Some(q),
                QuartileMode::PerDate => {
                    let active: Vec<f64> = series.iter().filter_map(|s| s.points[d].status.lma()).collect();
                    (!active.is_empty()).then(|| Quartiles::from_values(&active)).transpose()?
                }
            };
            Ok(series
                .iter()
                .map(|s| match q {
                    Some(q) => level_of(&s.points[d].status, &q),
                    None => Level::NotAnalysed,
                })
                .collect())
        })
        .collect()
}

/// Smallest set of authors jointly responsible for at least 80% of commits,
/// taking the most prolific first (ties by author id).
pub fn core_contributors(commits: &[CommitEvent]) -> Vec<String> {
    let mut counts: HashMap<&str, u64> = HashMap::new();
    for c in commits {
        *counts.entry(c.author_id.as_str()).or_default() += 1;
    }
    let mut ranked: Vec<(&str, u64)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    let total = commits.len() as u64;
    let mut covered = 0;
    let mut core = Vec::new();
    for (author, n) in ranked {
        if 5 * covered >= 4 * total {
            break;
        }
        covered += n;
        core.push(author.to_string());
    }
    core
}
