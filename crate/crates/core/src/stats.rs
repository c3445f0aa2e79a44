//! Rank statistics: Mann–Whitney U, Kruskal–Wallis H, Cliff's delta and
//! Spearman's ρ. All ties receive average ranks.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Average ranks (1-based) of `values`; tied values share the mean of the
/// ranks they occupy.
pub fn rank_average(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        // Ranks i+1 ..= j share their mean.
        let avg = (i + 1 + j) as f64 / 2.0;
        for &idx in &order[i..j] {
            ranks[idx] = avg;
        }
        i = j;
    }
    ranks
}

/// Sizes of the tie groups in `values`.
fn tie_sizes(values: &[f64]) -> Vec<usize> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut sizes = Vec::new();
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i + 1;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        sizes.push(j - i);
        i = j;
    }
    sizes
}

fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman's rank correlation: Pearson correlation of average ranks.
pub fn spearman_rho(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 3 {
        return Err(Error::TooFewRows {
            needed: 3,
            got: x.len(),
        });
    }
    pearson(&rank_average(x), &rank_average(y)).ok_or(Error::ZeroVariance)
}

/// Spearman ρ over precomputed rank vectors; `None` if either is constant.
pub(crate) fn pearson_of_ranks(rx: &[f64], ry: &[f64]) -> Option<f64> {
    pearson(rx, ry)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Alternative {
    TwoSided,
    /// The first sample tends to be larger.
    Greater,
    /// The first sample tends to be smaller.
    Less,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
    pub alternative: Alternative,
}

/// Above this many pairs the null distribution of U is approximated.
pub const EXACT_PAIR_LIMIT: usize = 20;

/// Mann–Whitney U test. The statistic is `U_a`, the number of pairs in which
/// the element of `a` is larger, counting ties as one half.
///
/// For `n·m ≤ 20` the p-value comes from enumerating every assignment of the
/// pooled ranks to `a`; otherwise from the normal approximation with tie
/// corrected variance and continuity correction.
pub fn mann_whitney_u(a: &[f64], b: &[f64], alternative: Alternative) -> Result<TestResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySample);
    }
    let (n, m) = (a.len(), b.len());
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let ranks = rank_average(&pooled);
    let rank_sum_a: f64 = ranks[..n].iter().sum();
    let u = rank_sum_a - (n * (n + 1)) as f64 / 2.0;

    let p_value = if n * m <= EXACT_PAIR_LIMIT {
        exact_u_p_value(&ranks, n, u, alternative)
    } else {
        normal_u_p_value(&pooled, n, m, u, alternative)
    };
    Ok(TestResult {
        statistic: u,
        p_value: p_value.clamp(0.0, 1.0),
        alternative,
    })
}

fn exact_u_p_value(ranks: &[f64], n: usize, u_obs: f64, alternative: Alternative) -> f64 {
    // Doubled ranks are integers, so U is compared exactly.
    let doubled: Vec<i64> = ranks.iter().map(|r| (r * 2.0).round() as i64).collect();
    let offset = (n * (n + 1)) as i64;
    let u_obs2 = (u_obs * 2.0).round() as i64;
    let mean2 = {
        let m = ranks.len() - n;
        (n * m) as i64
    };

    let (mut total, mut ge, mut le, mut extreme) = (0u64, 0u64, 0u64, 0u64);
    let obs_dev = (u_obs2 - mean2).abs();
    let mut chosen = Vec::with_capacity(n);
    fn walk(
        doubled: &[i64],
        start: usize,
        left: usize,
        chosen: &mut Vec<i64>,
        visit: &mut dyn FnMut(i64),
    ) {
        if left == 0 {
            visit(chosen.iter().sum());
            return;
        }
        for i in start..=doubled.len() - left {
            chosen.push(doubled[i]);
            walk(doubled, i + 1, left - 1, chosen, visit);
            chosen.pop();
        }
    }
    walk(&doubled, 0, n, &mut chosen, &mut |sum2| {
        let u2 = sum2 - offset;
        total += 1;
        if u2 >= u_obs2 {
            ge += 1;
        }
        if u2 <= u_obs2 {
            le += 1;
        }
        if (u2 - mean2).abs() >= obs_dev {
            extreme += 1;
        }
    });
    let total = total as f64;
    match alternative {
        Alternative::Greater => ge as f64 / total,
        Alternative::Less => le as f64 / total,
        Alternative::TwoSided => extreme as f64 / total,
    }
}

fn normal_u_p_value(pooled: &[f64], n: usize, m: usize, u: f64, alternative: Alternative) -> f64 {
    let total = (n + m) as f64;
    let nm = (n * m) as f64;
    let mean = nm / 2.0;
    let tie_term: f64 = tie_sizes(pooled)
        .into_iter()
        .map(|t| {
            let t = t as f64;
            t * t * t - t
        })
        .sum::<f64>()
        / (total * (total - 1.0));
    let variance = nm / 12.0 * ((total + 1.0) - tie_term);
    if variance <= 0.0 {
        return 1.0;
    }
    let sd = variance.sqrt();
    let normal = Normal::standard();
    match alternative {
        Alternative::Greater => normal.sf((u - mean - 0.5) / sd),
        Alternative::Less => normal.cdf((u - mean + 0.5) / sd),
        Alternative::TwoSided => {
            let z = ((u - mean).abs() - 0.5).max(0.0) / sd;
            2.0 * normal.sf(z)
        }
    }
}

/// Kruskal–Wallis H test with tie correction; p-value from χ² with
/// `groups − 1` degrees of freedom. When every value is tied, H = 0 and p = 1.
pub fn kruskal_wallis<S: AsRef<[f64]>>(groups: &[S]) -> Result<TestResult> {
    if groups.len() < 2 || groups.iter().any(|g| g.as_ref().is_empty()) {
        return Err(Error::EmptySample);
    }
    let pooled: Vec<f64> = groups.iter().flat_map(|g| g.as_ref().iter().copied()).collect();
    let total = pooled.len() as f64;
    let ranks = rank_average(&pooled);
    let mut offset = 0;
    let mut sum = 0.0;
    for g in groups {
        let len = g.as_ref().len();
        let r: f64 = ranks[offset..offset + len].iter().sum();
        sum += r * r / len as f64;
        offset += len;
    }
    let h_raw = 12.0 / (total * (total + 1.0)) * sum - 3.0 * (total + 1.0);
    let ties: f64 = tie_sizes(&pooled)
        .into_iter()
        .map(|t| {
            let t = t as f64;
            t * t * t - t
        })
        .sum();
    let correction = 1.0 - ties / (total * total * total - total);
    if correction <= 0.0 {
        return Ok(TestResult {
            statistic: 0.0,
            p_value: 1.0,
            alternative: Alternative::TwoSided,
        });
    }
    let h = (h_raw / correction).max(0.0);
    let chi = ChiSquared::new((groups.len() - 1) as f64).expect("positive degrees of freedom");
    Ok(TestResult {
        statistic: h,
        p_value: chi.sf(h).clamp(0.0, 1.0),
        alternative: Alternative::TwoSided,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Magnitude {
    Negligible,
    Small,
    Medium,
    Large,
}

impl Magnitude {
    /// `|d| ≤ 0.147` negligible, `< 0.33` small, `< 0.474` medium, else large.
    pub fn of(d: f64) -> Magnitude {
        let d = d.abs();
        if d <= 0.147 {
            Magnitude::Negligible
        } else if d < 0.33 {
            Magnitude::Small
        } else if d < 0.474 {
            Magnitude::Medium
        } else {
            Magnitude::Large
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Magnitude::Negligible => "negligible",
            Magnitude::Small => "small",
            Magnitude::Medium => "medium",
            Magnitude::Large => "large",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectSize {
    pub d: f64,
    pub magnitude: Magnitude,
}

/// Cliff's delta: `(#(a > b) − #(a < b)) / (n·m)` over all pairs.
///
/// Counted by binary search over the sorted second sample.
pub fn cliffs_delta(a: &[f64], b: &[f64]) -> Result<EffectSize> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut sorted = b.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut balance: i128 = 0;
    for &x in a {
        let below = sorted.partition_point(|&y| y < x) as i128;
        let not_above = sorted.partition_point(|&y| y <= x) as i128;
        let above = sorted.len() as i128 - not_above;
        balance += below - above;
    }
    let d = balance as f64 / (a.len() as f64 * b.len() as f64);
    Ok(EffectSize {
        d,
        magnitude: Magnitude::of(d),
    })
}

/// Type-7 quantile (linear interpolation between order statistics).
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}
