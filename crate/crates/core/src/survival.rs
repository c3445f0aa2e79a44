//! Kaplan–Meier survival curves over repository lifetimes.
//!
//! Products are kept as exact rationals so that uncensored curves reproduce
//! the empirical survival function without rounding.

use std::collections::BTreeMap;
use std::io::Write;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::snapshot::RepoSnapshot;
use crate::stats::{cliffs_delta, kruskal_wallis, mann_whitney_u, Alternative, EffectSize, TestResult};
use crate::time::{Timestamp, DAYS_PER_MONTH, SECONDS_PER_MONTH};

/// Shortest lifetime recorded, one day in months, for single-commit repos.
pub const MIN_DURATION_MONTHS: f64 = 1.0 / DAYS_PER_MONTH as f64;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupKeys {
    pub account_type: String,
    pub language: String,
    pub domain: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LifetimeSample {
    pub repo_id: String,
    pub duration_months: f64,
    /// `true` when the repository became unmaintained; `false` when it was
    /// still active when observed.
    pub event: bool,
    pub groups: GroupKeys,
}

impl LifetimeSample {
    pub fn new(repo_id: impl Into<String>, duration_months: f64, event: bool) -> LifetimeSample {
        LifetimeSample {
            repo_id: repo_id.into(),
            duration_months,
            event,
            groups: GroupKeys {
                account_type: String::new(),
                language: String::new(),
                domain: None,
            },
        }
    }
}

/// Months from the first commit to the last commit for unmaintained repos,
/// and to `observed_at` for active ones, which are censored there.
pub fn lifetime(s: &RepoSnapshot, observed_at: Timestamp, unmaintained: bool) -> Result<LifetimeSample> {
    let (Some(first), Some(last)) = (s.first_commit(), s.last_commit()) else {
        return Err(Error::NoCommits(s.repo_id()));
    };
    let end = if unmaintained { last } else { observed_at.max(last) };
    let months = end.seconds_since(first) as f64 / SECONDS_PER_MONTH as f64;
    Ok(LifetimeSample {
        repo_id: s.repo_id(),
        duration_months: months.max(MIN_DURATION_MONTHS),
        event: unmaintained,
        groups: GroupKeys {
            account_type: s.owner_kind.as_str().to_string(),
            language: s.primary_language.clone(),
            domain: s.domain_label.clone(),
        },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Step {
    pub t: f64,
    #[serde(rename = "S")]
    pub survival: f64,
    pub at_risk: usize,
    pub events: usize,
    #[serde(skip)]
    pub exact: BigRational,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurvivalCurve {
    /// A leading `(t₀, 1)` step followed by one step per distinct event time.
    pub steps: Vec<Step>,
}

impl SurvivalCurve {
    /// S(t): survival of the last step at or before `t`.
    pub fn survival_at(&self, t: f64) -> f64 {
        self.exact_at(t).to_f64().unwrap_or(f64::NAN)
    }

    pub fn exact_at(&self, t: f64) -> &BigRational {
        let i = self.steps.partition_point(|s| s.t <= t);
        &self.steps[i.saturating_sub(1)].exact
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct KmOptions {
    /// Only samples that lived at least this long enter, and the curve is
    /// conditional on surviving to it.
    pub left_truncate_months: Option<f64>,
}

pub fn kaplan_meier(samples: &[LifetimeSample]) -> Result<SurvivalCurve> {
    kaplan_meier_with(samples, KmOptions::default())
}

pub fn kaplan_meier_with(samples: &[LifetimeSample], opts: KmOptions) -> Result<SurvivalCurve> {
    let origin = opts.left_truncate_months.unwrap_or(0.0);
    let mut kept: Vec<(f64, bool)> = samples
        .iter()
        .filter(|s| s.duration_months >= origin)
        .map(|s| (s.duration_months, s.event))
        .collect();
    if kept.is_empty() {
        return Err(Error::EmptySample);
    }
    if let Some(bad) = kept.iter().find(|s| !(s.0 > 0.0) || !s.0.is_finite()) {
        return Err(Error::malformed(
            "lifetime",
            "duration_months",
            format!("must be positive, got {}", bad.0),
        ));
    }
    kept.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut s = BigRational::one();
    let mut steps = vec![Step {
        t: origin,
        survival: 1.0,
        at_risk: kept.len(),
        events: 0,
        exact: s.clone(),
    }];
    let mut i = 0;
    while i < kept.len() {
        let t = kept[i].0;
        let at_risk = kept.len() - i;
        let mut events = 0;
        while i < kept.len() && kept[i].0 == t {
            events += usize::from(kept[i].1);
            i += 1;
        }
        if events == 0 {
            continue;
        }
        s *= BigRational::new(BigInt::from(at_risk - events), BigInt::from(at_risk));
        steps.push(Step {
            t,
            survival: s.to_f64().unwrap_or(0.0),
            at_risk,
            events,
            exact: s.clone(),
        });
        if s.is_zero() {
            break;
        }
    }
    Ok(SurvivalCurve { steps })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupKey {
    AccountType,
    Language,
    Domain,
}

impl std::str::FromStr for GroupKey {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "account_type" | "account-type" => Ok(GroupKey::AccountType),
            "language" => Ok(GroupKey::Language),
            "domain" => Ok(GroupKey::Domain),
            other => Err(format!("unknown group key {other:?}")),
        }
    }
}

impl GroupKey {
    fn value(self, s: &LifetimeSample) -> Option<&str> {
        match self {
            GroupKey::AccountType => Some(&s.groups.account_type),
            GroupKey::Language => Some(&s.groups.language),
            GroupKey::Domain => s.groups.domain.as_deref(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairComparison {
    pub a: String,
    pub b: String,
    pub mann_whitney: TestResult,
    pub effect: EffectSize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupedSurvival {
    pub curves: BTreeMap<String, SurvivalCurve>,
    /// Every pair of groups in name order, on lifetimes.
    pub pairwise: Vec<PairComparison>,
    pub kruskal_wallis: TestResult,
}

/// One curve per group of `key`. Groups with fewer than two samples, and
/// samples with no value for the key, are left out.
pub fn grouped_curves(samples: &[LifetimeSample], key: GroupKey) -> Result<GroupedSurvival> {
    let mut groups: BTreeMap<String, Vec<&LifetimeSample>> = BTreeMap::new();
    for s in samples {
        if let Some(v) = key.value(s) {
            groups.entry(v.to_string()).or_default().push(s);
        }
    }
    groups.retain(|_, v| v.len() >= 2);
    if groups.len() < 2 {
        return Err(Error::TooFewGroups(groups.len()));
    }
    let entries: Vec<(String, Vec<LifetimeSample>)> = groups
        .into_iter()
        .map(|(k, v)| (k, v.into_iter().cloned().collect()))
        .collect();
    let curves = entries
        .par_iter()
        .map(|(k, v)| Ok((k.clone(), kaplan_meier(v)?)))
        .collect::<Result<BTreeMap<_, _>>>()?;
    let durations: Vec<Vec<f64>> = entries
        .iter()
        .map(|(_, v)| v.iter().map(|s| s.duration_months).collect())
        .collect();
    let mut pairwise = Vec::new();
    for i in 0..entries.len() {
        for j in i + 1..entries.len() {
            pairwise.push(PairComparison {
                a: entries[i].0.clone(),
                b: entries[j].0.clone(),
                mann_whitney: mann_whitney_u(&durations[i], &durations[j], Alternative::TwoSided)?,
                effect: cliffs_delta(&durations[i], &durations[j])?,
            });
        }
    }
    Ok(GroupedSurvival {
        curves,
        pairwise,
        kruskal_wallis: kruskal_wallis(&durations)?,
    })
}

/// First and fourth quartile of samples by duration, ties ordered by repo id.
/// Each side holds `floor(n / 4)` samples.
pub fn quartile_split(samples: &[LifetimeSample]) -> (Vec<&LifetimeSample>, Vec<&LifetimeSample>) {
    let mut sorted: Vec<&LifetimeSample> = samples.iter().collect();
    sorted.sort_by(|a, b| {
        a.duration_months
            .total_cmp(&b.duration_months)
            .then_with(|| a.repo_id.cmp(&b.repo_id))
    });
    let q = sorted.len() / 4;
    let upper = sorted[sorted.len() - q..].to_vec();
    sorted.truncate(q);
    (sorted, upper)
}

/// `t,S,at_risk,events,group`, one row per step.
pub fn write_curves_csv<W: Write>(curves: &[(&str, &SurvivalCurve)], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |source| Error::Csv {
        context: "survival".into(),
        source,
    };
    w.write_record(["t", "S", "at_risk", "events", "group"]).map_err(csv_err)?;
    for (group, curve) in curves {
        for s in &curve.steps {
            w.write_record([
                format!("{:.6}", s.t),
                format!("{:.6}", s.survival),
                s.at_risk.to_string(),
                s.events.to_string(),
                group.to_string(),
            ])
            .map_err(csv_err)?;
        }
    }
    w.flush().map_err(|e| Error::io("survival", e))
}
