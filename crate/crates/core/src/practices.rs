//! Contribution practices, README deprecation phrases, and adoption
//! comparisons between groups of repositories.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use url::Url;

use crate::error::{Error, Result};
use crate::snapshot::RepoSnapshot;
use crate::stats::{cliffs_delta, mann_whitney_u, Alternative, Magnitude};

const DEFAULT_PHRASES: &str = include_str!("../data/deprecation_sentences.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Practice {
    License,
    HomePage,
    ContinuousIntegration,
    ContributingGuidelines,
    IssueTemplate,
    CodeOfConduct,
    PullRequestTemplate,
    SupportFile,
    FirstTimersLabels,
}

impl Practice {
    pub const ALL: [Practice; 9] = [
        Practice::License,
        Practice::HomePage,
        Practice::ContinuousIntegration,
        Practice::ContributingGuidelines,
        Practice::IssueTemplate,
        Practice::CodeOfConduct,
        Practice::PullRequestTemplate,
        Practice::SupportFile,
        Practice::FirstTimersLabels,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Practice::License => "license",
            Practice::HomePage => "home_page",
            Practice::ContinuousIntegration => "continuous_integration",
            Practice::ContributingGuidelines => "contributing_guidelines",
            Practice::IssueTemplate => "issue_template",
            Practice::CodeOfConduct => "code_of_conduct",
            Practice::PullRequestTemplate => "pull_request_template",
            Practice::SupportFile => "support_file",
            Practice::FirstTimersLabels => "first_timers_labels",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PracticeProfile {
    pub license: bool,
    pub home_page: bool,
    pub continuous_integration: bool,
    pub contributing_guidelines: bool,
    pub issue_template: bool,
    pub code_of_conduct: bool,
    pub pull_request_template: bool,
    pub support_file: bool,
    pub first_timers_labels: bool,
}

impl PracticeProfile {
    pub fn get(&self, p: Practice) -> bool {
        match p {
            Practice::License => self.license,
            Practice::HomePage => self.home_page,
            Practice::ContinuousIntegration => self.continuous_integration,
            Practice::ContributingGuidelines => self.contributing_guidelines,
            Practice::IssueTemplate => self.issue_template,
            Practice::CodeOfConduct => self.code_of_conduct,
            Practice::PullRequestTemplate => self.pull_request_template,
            Practice::SupportFile => self.support_file,
            Practice::FirstTimersLabels => self.first_timers_labels,
        }
    }
}

fn split_path(path: &str) -> (Option<&str>, String) {
    let path = path.trim_start_matches('/');
    match path.rsplit_once('/') {
        Some((dir, base)) => (Some(dir), base.to_ascii_uppercase()),
        None => (None, path.to_ascii_uppercase()),
    }
}

fn at_root_or_github(dir: Option<&str>) -> bool {
    matches!(dir, None | Some(".github"))
}

/// Homepage on a domain other than github.com or github.io.
fn is_external_homepage(url: &str) -> bool {
    let url = url.trim();
    if url.is_empty() {
        return false;
    }
    let parsed = Url::parse(url).or_else(|_| Url::parse(&format!("http://{url}")));
    let Ok(parsed) = parsed else {
        return false;
    };
    let Some(host) = parsed.host_str() else {
        return false;
    };
    let host = host.trim_end_matches('.').to_ascii_lowercase();
    !["github.com", "github.io"]
        .iter()
        .any(|d| host == *d || host.ends_with(&format!(".{d}")))
}

fn is_first_timers_label(label: &str) -> bool {
    let norm = label.trim().to_lowercase().replace(['-', '_'], " ");
    norm == "help wanted" || norm == "good first issue"
}

pub fn detect_practices(s: &RepoSnapshot) -> PracticeProfile {
    let mut p = PracticeProfile {
        home_page: s.homepage_url.as_deref().is_some_and(is_external_homepage),
        first_timers_labels: s.labels.iter().any(|l| is_first_timers_label(l)),
        ..PracticeProfile::default()
    };
    for path in &s.repo_files {
        let (dir, base) = split_path(path);
        let upper_path = path.to_ascii_uppercase();
        if dir.is_none() && (base.starts_with("LICENSE") || base.starts_with("COPYING")) {
            p.license = true;
        }
        if dir.is_none() && base == ".TRAVIS.YML" {
            p.continuous_integration = true;
        }
        if at_root_or_github(dir) && base.starts_with("CONTRIBUTING") {
            p.contributing_guidelines = true;
        }
        if upper_path.split('/').any(|c| c.starts_with("ISSUE_TEMPLATE")) {
            p.issue_template = true;
        }
        if at_root_or_github(dir) && base.starts_with("CODE_OF_CONDUCT") {
            p.code_of_conduct = true;
        }
        if upper_path.split('/').any(|c| c.starts_with("PULL_REQUEST_TEMPLATE")) {
            p.pull_request_template = true;
        }
        if at_root_or_github(dir) && base.starts_with("SUPPORT") {
            p.support_file = true;
        }
    }
    p
}

/// Case-folds one character, mapping typographic apostrophes to `'`.
fn fold(c: char) -> impl Iterator<Item = char> {
    let c = if matches!(c, '\u{2019}' | '\u{2018}' | '\u{02BC}') { '\'' } else { c };
    c.to_lowercase()
}

fn normalize(text: &str) -> String {
    text.chars().flat_map(fold).collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhraseList {
    phrases: Vec<String>,
}

impl Default for PhraseList {
    fn default() -> Self {
        PhraseList::parse(DEFAULT_PHRASES)
    }
}

impl PhraseList {
    /// One phrase per line; blank lines and `#` comments are skipped and
    /// duplicates (after folding) dropped.
    pub fn parse(text: &str) -> PhraseList {
        let mut phrases: Vec<String> = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let phrase = normalize(line);
            if !phrases.contains(&phrase) {
                phrases.push(phrase);
            }
        }
        PhraseList { phrases }
    }

    pub fn from_file(path: &Path) -> Result<PhraseList> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(PhraseList::parse(&text))
    }

    pub fn phrases(&self) -> &[String] {
        &self.phrases
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhraseHit {
    pub phrase: String,
    /// Character offset of the match in the original text.
    pub offset: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeprecationVerdict {
    pub matched: bool,
    pub sentences_hit: Vec<PhraseHit>,
}

pub fn scan_readme(text: &str) -> DeprecationVerdict {
    scan_readme_with(text, &PhraseList::default())
}

/// Every occurrence of every phrase, ordered by offset then phrase.
pub fn scan_readme_with(text: &str, phrases: &PhraseList) -> DeprecationVerdict {
    let mut folded = Vec::new();
    let mut origin = Vec::new();
    for (i, c) in text.chars().enumerate() {
        for f in fold(c) {
            folded.push(f);
            origin.push(i);
        }
    }
    let mut hits = Vec::new();
    for phrase in &phrases.phrases {
        let needle: Vec<char> = phrase.chars().collect();
        if needle.is_empty() || needle.len() > folded.len() {
            continue;
        }
        for start in 0..=folded.len() - needle.len() {
            if folded[start..start + needle.len()] == needle[..] {
                hits.push(PhraseHit {
                    phrase: phrase.clone(),
                    offset: origin[start],
                });
            }
        }
    }
    hits.sort_by(|a, b| a.offset.cmp(&b.offset).then_with(|| a.phrase.cmp(&b.phrase)));
    hits.dedup();
    DeprecationVerdict {
        matched: !hits.is_empty(),
        sentences_hit: hits,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdoptionRow {
    pub practice: Practice,
    pub share_a: f64,
    pub share_b: f64,
    pub d: f64,
    pub magnitude: Magnitude,
    pub p_value: f64,
}

/// Per practice: adoption shares, Cliff's delta and a two-sided Mann–Whitney
/// p-value over the 0/1 indicators.
pub fn compare_adoption(a: &[PracticeProfile], b: &[PracticeProfile]) -> Result<Vec<AdoptionRow>> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySample);
    }
    let indicator = |g: &[PracticeProfile], p| -> Vec<f64> {
        g.iter().map(|x| if x.get(p) { 1.0 } else { 0.0 }).collect()
    };
    Practice::ALL
        .iter()
        .map(|&p| {
            let (xa, xb) = (indicator(a, p), indicator(b, p));
            let effect = cliffs_delta(&xa, &xb)?;
            let test = mann_whitney_u(&xa, &xb, Alternative::TwoSided)?;
            Ok(AdoptionRow {
                practice: p,
                share_a: xa.iter().sum::<f64>() / xa.len() as f64,
                share_b: xb.iter().sum::<f64>() / xb.len() as f64,
                d: effect.d,
                magnitude: effect.magnitude,
                p_value: test.p_value,
            })
        })
        .collect()
}

/// `practice,share_a,share_b,d,magnitude,p_value`.
pub fn write_adoption_csv<W: Write>(rows: &[AdoptionRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |source| Error::Csv {
        context: "practices".into(),
        source,
    };
    w.write_record(["practice", "share_a", "share_b", "d", "magnitude", "p_value"])
        .map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.practice.as_str().to_string(),
            format!("{:.2}", r.share_a),
            format!("{:.2}", r.share_b),
            format!("{:.2}", r.d),
            r.magnitude.as_str().to_string(),
            format!("{:.4}", r.p_value),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io("practices", e))
}
