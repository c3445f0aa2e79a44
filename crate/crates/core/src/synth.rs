//! Seeded generator of labeled synthetic repository histories.
//!
//! Each repository gets a monthly commit-rate curve from an activity profile;
//! issues, pull requests and releases follow the commit rate, and every count
//! is Poisson per 30-day month. Active repositories are steady or bursty,
//! unmaintained ones decay or stop entirely inside the last 24 months.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, LogNormal, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::derive_seed;
use crate::snapshot::{
    CommitEvent, Corpus, CorpusEntry, ForkEvent, IssueEvent, Label, OwnerKind, OwnerStats, PullEvent,
    RepoSnapshot,
};
use crate::time::{Timestamp, SECONDS_PER_DAY, SECONDS_PER_MONTH};

/// Months at the end of the history in which unmaintained profiles wind down.
pub const TRAILING_WINDOW_MONTHS: u32 = 24;

const LANGUAGES: [&str; 6] = ["JavaScript", "Python", "Java", "Ruby", "Go", "C++"];
const DOMAINS: [&str; 5] = [
    "application software",
    "documentation",
    "non-web libraries and frameworks",
    "software tools",
    "web libraries and frameworks",
];

/// Named noise presets, as multiplicative log-rate standard deviations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseLevel {
    None,
    Low,
    Moderate,
    High,
}

impl NoiseLevel {
    pub fn sigma(self) -> f64 {
        match self {
            NoiseLevel::None => 0.0,
            NoiseLevel::Low => 0.25,
            NoiseLevel::Moderate => 0.5,
            NoiseLevel::High => 1.0,
        }
    }
}

impl std::str::FromStr for NoiseLevel {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "none" => Ok(NoiseLevel::None),
            "low" => Ok(NoiseLevel::Low),
            "moderate" => Ok(NoiseLevel::Moderate),
            "high" => Ok(NoiseLevel::High),
            other => Err(format!("unknown noise level {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivityProfiles {
    /// Range of the base commit rate per month.
    pub base_commits: (f64, f64),
    /// Share of active repositories that are bursty rather than steady.
    pub bursty_share: f64,
    pub burst_probability: f64,
    pub burst_multiplier: f64,
    pub lull_multiplier: f64,
    /// Share of unmaintained repositories that stop rather than decay.
    pub dead_share: f64,
    /// Month of the trailing window in which decay starts, inclusive range.
    pub decay_onset: (u32, u32),
    pub decay_half_life_months: (f64, f64),
    /// Month of the trailing window from which a dead profile is silent.
    pub dead_after: (u32, u32),
    pub issues_per_commit: f64,
    pub pulls_per_commit: f64,
    /// Issues and pulls opened per month regardless of activity.
    pub background_issues: f64,
    pub background_pulls: f64,
    pub release_probability: f64,
    /// Range of the monthly fork rate, independent of the label.
    pub fork_rate: (f64, f64),
}

impl Default for ActivityProfiles {
    fn default() -> Self {
        ActivityProfiles {
            base_commits: (6.0, 30.0),
            bursty_share: 0.3,
            burst_probability: 0.2,
            burst_multiplier: 3.0,
            lull_multiplier: 0.6,
            dead_share: 0.5,
            decay_onset: (0, 6),
            decay_half_life_months: (1.0, 4.0),
            dead_after: (6, 18),
            issues_per_commit: 0.3,
            pulls_per_commit: 0.2,
            background_issues: 0.3,
            background_pulls: 0.1,
            release_probability: 0.3,
            fork_rate: (0.2, 3.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub n_repos: usize,
    pub fraction_unmaintained: f64,
    pub months_of_history: u32,
    pub profiles: ActivityProfiles,
    /// Standard deviation of the per-month log-normal rate multiplier.
    pub noise_level: f64,
    pub seed: u64,
    /// `fetched_at` of every snapshot; the history ends here.
    pub observed_at: Timestamp,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            n_repos: 500,
            fraction_unmaintained: 0.25,
            months_of_history: 48,
            profiles: ActivityProfiles::default(),
            noise_level: NoiseLevel::Moderate.sigma(),
            seed: 0,
            observed_at: Timestamp::ymd(2018, 11, 1),
        }
    }
}

impl GeneratorConfig {
    /// 754 active and 248 unmaintained repositories.
    pub fn imbalanced_preset(seed: u64) -> GeneratorConfig {
        GeneratorConfig {
            n_repos: 1002,
            fraction_unmaintained: 248.0 / 1002.0,
            seed,
            ..GeneratorConfig::default()
        }
    }

    pub fn n_unmaintained(&self) -> usize {
        (self.n_repos as f64 * self.fraction_unmaintained).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        let p = &self.profiles;
        if self.n_repos == 0 {
            return bad("n_repos must be positive".into());
        }
        if !(self.fraction_unmaintained > 0.0 && self.fraction_unmaintained < 1.0) {
            return bad(format!(
                "fraction_unmaintained must be in (0, 1), got {}",
                self.fraction_unmaintained
            ));
        }
        if self.months_of_history < TRAILING_WINDOW_MONTHS {
            return bad(format!(
                "months_of_history must be at least {TRAILING_WINDOW_MONTHS}, got {}",
                self.months_of_history
            ));
        }
        if !(self.noise_level >= 0.0 && self.noise_level.is_finite()) {
            return bad(format!("noise_level must be non-negative, got {}", self.noise_level));
        }
        let ranges = [
            ("base_commits", p.base_commits),
            ("decay_half_life_months", p.decay_half_life_months),
            ("fork_rate", p.fork_rate),
        ];
        for (name, (lo, hi)) in ranges {
            if !(lo >= 0.0 && lo <= hi && hi.is_finite()) {
                return bad(format!("{name} must be an ordered non-negative range"));
            }
        }
        if p.decay_half_life_months.0 <= 0.0 {
            return bad("decay_half_life_months must be positive".into());
        }
        let shares = [
            ("bursty_share", p.bursty_share),
            ("burst_probability", p.burst_probability),
            ("dead_share", p.dead_share),
            ("release_probability", p.release_probability),
        ];
        for (name, v) in shares {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("{name} must be in [0, 1]"));
            }
        }
        let rates = [
            p.burst_multiplier,
            p.lull_multiplier,
            p.issues_per_commit,
            p.pulls_per_commit,
            p.background_issues,
            p.background_pulls,
        ];
        if rates.iter().any(|r| !(*r >= 0.0 && r.is_finite())) {
            return bad("rates must be non-negative".into());
        }
        if p.decay_onset.0 > p.decay_onset.1 || p.decay_onset.1 >= TRAILING_WINDOW_MONTHS {
            return bad("decay_onset must be an ordered range inside the trailing window".into());
        }
        if p.dead_after.0 == 0 || p.dead_after.0 > p.dead_after.1 || p.dead_after.1 > TRAILING_WINDOW_MONTHS {
            return bad("dead_after must be an ordered range in 1..=24".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Profile {
    Steady,
    Bursty,
    /// Halving every `half_life` months from trailing-window month `onset`.
    Decaying { onset: u32, half_life: f64 },
    /// Winding down, then silent from trailing-window month `k` on.
    DeadAfter { k: u32 },
}

impl Profile {
    pub fn label(self) -> Label {
        match self {
            Profile::Steady | Profile::Bursty => Label::Active,
            Profile::Decaying { .. } | Profile::DeadAfter { .. } => Label::Unmaintained,
        }
    }

    fn draw(label: Label, p: &ActivityProfiles, rng: &mut impl Rng) -> Profile {
        match label {
            Label::Unmaintained if rng.random_bool(p.dead_share) => Profile::DeadAfter {
                k: rng.random_range(p.dead_after.0..=p.dead_after.1),
            },
            Label::Unmaintained => Profile::Decaying {
                onset: rng.random_range(p.decay_onset.0..=p.decay_onset.1),
                half_life: uniform(rng, p.decay_half_life_months),
            },
            _ if rng.random_bool(p.bursty_share) => Profile::Bursty,
            _ => Profile::Steady,
        }
    }

    /// Rate multiplier for history month `m` of `h`.
    fn factor(self, m: u32, h: u32, p: &ActivityProfiles, rng: &mut impl Rng) -> f64 {
        let window_start = h - TRAILING_WINDOW_MONTHS;
        let wm = m.checked_sub(window_start);
        match (self, wm) {
            (Profile::Steady, _) => 1.0,
            (Profile::Bursty, _) => {
                if rng.random_bool(p.burst_probability) {
                    p.burst_multiplier
                } else {
                    p.lull_multiplier
                }
            }
            (Profile::Decaying { onset, half_life }, Some(wm)) if wm >= onset => {
                0.5f64.powf(f64::from(wm - onset + 1) / half_life)
            }
            (Profile::DeadAfter { k }, Some(wm)) if wm >= k => 0.0,
            (Profile::DeadAfter { k }, Some(wm)) => 1.0 - 0.7 * f64::from(wm) / f64::from(k),
            _ => 1.0,
        }
    }
}

fn uniform(rng: &mut impl Rng, (lo, hi): (f64, f64)) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..hi)
    }
}

fn poisson(rng: &mut impl Rng, rate: f64) -> u64 {
    if rate <= 0.0 {
        return 0;
    }
    Poisson::new(rate).map(|d| d.sample(rng) as u64).unwrap_or(0)
}

/// Generates the corpus; labels are exact and placed by a seeded shuffle.
pub fn generate_corpus(cfg: &GeneratorConfig) -> Result<Corpus> {
    cfg.validate()?;
    let mut order: Vec<usize> = (0..cfg.n_repos).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, 0)));
    let mut labels = vec![Label::Active; cfg.n_repos];
    for &i in &order[..cfg.n_unmaintained()] {
        labels[i] = Label::Unmaintained;
    }
    let entries = labels
        .par_iter()
        .enumerate()
        .map(|(i, &label)| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, i as u64 + 1));
            let profile = Profile::draw(label, &cfg.profiles, &mut rng);
            CorpusEntry {
                snapshot: generate_repo(cfg, i, profile, &mut rng),
                label,
            }
        })
        .collect();
    Ok(Corpus { entries })
}

/// One repository following `profile`.
pub fn generate_repo(cfg: &GeneratorConfig, index: usize, profile: Profile, rng: &mut impl Rng) -> RepoSnapshot {
    let p = &cfg.profiles;
    let h = cfg.months_of_history;
    let end = cfg.observed_at;
    let start = end.plus_seconds(-i64::from(h) * SECONDS_PER_MONTH);
    let unmaintained = profile.label() == Label::Unmaintained;
    let base = uniform(rng, p.base_commits);
    let fork_rate = uniform(rng, p.fork_rate);
    let developers = 1 + poisson(rng, 3.0) as usize;
    let weights: Vec<f64> = (0..developers).map(|j| 1.0 / (j + 1) as f64).collect();
    let weight_total: f64 = weights.iter().sum();
    let noise = LogNormal::new(-cfg.noise_level * cfg.noise_level / 2.0, cfg.noise_level)
        .expect("validated noise level");
    let close_delay = Exp::new(1.0 / 10.0).expect("positive rate");

    let pick_author = |rng: &mut ChaCha8Rng| {
        let mut x = rng.random_range(0.0..weight_total);
        for (j, w) in weights.iter().enumerate() {
            if x < *w {
                return format!("dev{j}");
            }
            x -= w;
        }
        format!("dev{}", developers - 1)
    };
    let mut local = ChaCha8Rng::seed_from_u64(rng.random());
    let rng = &mut local;
    let at = |m: u32, rng: &mut ChaCha8Rng| {
        start.plus_seconds(i64::from(m) * SECONDS_PER_MONTH + rng.random_range(0..SECONDS_PER_MONTH))
    };
    let closes = |opened: Timestamp, activity: f64, rng: &mut ChaCha8Rng| -> Option<Timestamp> {
        let p_close = 0.85 * activity.min(1.0);
        if !rng.random_bool(p_close) {
            return None;
        }
        let days: f64 = close_delay.sample(rng);
        let closed = opened.plus_seconds((days * SECONDS_PER_DAY as f64) as i64 + 1);
        (closed <= end).then_some(closed)
    };

    let mut commits = vec![CommitEvent {
        author_id: "dev0".into(),
        timestamp: start,
    }];
    // Every repository commits at the start of the trailing window, so its
    // history is long enough under either anchoring policy when h ≥ 48.
    commits.push(CommitEvent {
        author_id: "dev0".into(),
        timestamp: start.plus_seconds(i64::from(h - TRAILING_WINDOW_MONTHS) * SECONDS_PER_MONTH),
    });
    let (mut issues, mut pulls, mut forks, mut releases) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for m in 0..h {
        let activity = profile.factor(m, h, p, rng);
        let nf = if cfg.noise_level > 0.0 { noise.sample(rng) } else { 1.0 };
        let rate = base * activity * nf;
        for _ in 0..poisson(rng, rate) {
            let timestamp = at(m, rng);
            commits.push(CommitEvent {
                author_id: pick_author(rng),
                timestamp,
            });
        }
        for _ in 0..poisson(rng, p.issues_per_commit * rate + p.background_issues) {
            let opened_at = at(m, rng);
            issues.push(IssueEvent {
                opened_at,
                closed_at: closes(opened_at, activity, rng),
                author_id: format!("user{}", rng.random_range(0..50)),
            });
        }
        for _ in 0..poisson(rng, p.pulls_per_commit * rate + p.background_pulls) {
            let opened_at = at(m, rng);
            let closed_at = closes(opened_at, activity, rng);
            let merged_at = closed_at.filter(|_| rng.random_bool(0.7));
            pulls.push(PullEvent {
                opened_at,
                closed_at,
                merged_at,
                author_id: format!("user{}", rng.random_range(0..50)),
            });
        }
        for _ in 0..poisson(rng, fork_rate) {
            forks.push(ForkEvent { created_at: at(m, rng) });
        }
        if rng.random_bool((p.release_probability * activity).min(1.0)) {
            releases.push(at(m, rng));
        }
    }

    let bernoulli = |rng: &mut ChaCha8Rng, active: f64, inactive: f64| {
        rng.random_bool(if unmaintained { inactive } else { active })
    };
    let name = format!("repo{index:04}");
    let mut repo_files = vec!["README.md".to_string(), "src".to_string()];
    let optional = [
        ("LICENSE", 0.8, 0.7),
        (".travis.yml", 0.7, 0.45),
        ("CONTRIBUTING.md", 0.3, 0.15),
        (".github/ISSUE_TEMPLATE.md", 0.2, 0.1),
        ("CODE_OF_CONDUCT.md", 0.15, 0.1),
        (".github/PULL_REQUEST_TEMPLATE.md", 0.1, 0.05),
        ("SUPPORT.md", 0.05, 0.02),
    ];
    for (file, a, u) in optional {
        if bernoulli(rng, a, u) {
            repo_files.push(file.into());
        }
    }
    let mut labels = vec!["bug".to_string(), "enhancement".to_string()];
    if bernoulli(rng, 0.4, 0.25) {
        labels.push("help wanted".into());
    }
    if bernoulli(rng, 0.2, 0.1) {
        labels.push("good first issue".into());
    }
    let homepage_url = match rng.random_range(0..5) {
        0 | 1 => Some(format!("https://{name}.example.org")),
        2 => Some(format!("https://owner{index:04}.github.io/{name}")),
        _ => None,
    };
    let mut readme_text = format!("# {name}\n\nSynthetic repository for testing.\n");
    if unmaintained && rng.random_bool(0.3) {
        readme_text.push_str("\nThis project is no longer maintained.\n");
    }

    let mut s = RepoSnapshot {
        owner_login: format!("owner{index:04}"),
        repo_name: name,
        owner_kind: if rng.random_bool(0.5) {
            OwnerKind::Organization
        } else {
            OwnerKind::User
        },
        primary_language: LANGUAGES[rng.random_range(0..LANGUAGES.len())].into(),
        domain_label: Some(DOMAINS[rng.random_range(0..DOMAINS.len())].into()),
        star_count: (fork_rate * 500.0 * uniform(rng, (0.5, 1.5))) as u64,
        size_loc: 0,
        commits,
        issues,
        pulls,
        forks,
        releases,
        // Owner statistics carry no label information.
        owner_stats: OwnerStats {
            projects_created: vec![poisson(rng, 20.0)],
            owner_commit_count: rng.random_range(0..=500),
        },
        repo_files,
        labels,
        homepage_url,
        readme_text,
        fetched_at: end,
    };
    s.canonicalize();
    s
}
