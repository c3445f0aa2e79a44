//! Fixtures shared by the service tests and the acceptance run.
#![allow(dead_code)]

use repo_vitals::features::data_point_names;
use repo_vitals::forest::{DecisionTree, Node};
use repo_vitals::lma::Quartiles;
use repo_vitals::snapshot::{CommitEvent, OwnerKind, OwnerStats};
use repo_vitals::{AnchorPolicy, Class, Forest, ForestConfig, RepoSnapshot, Timestamp};
use repo_vitals_cli::commands::DEFAULT_SCENARIO;
use repo_vitals_cli::ModelBundle;

/// Monthly commits by one author from `first` through `last`.
pub fn snapshot(owner: &str, name: &str, first: Timestamp, last: Timestamp) -> RepoSnapshot {
    let mut commits = Vec::new();
    let mut t = first;
    while t <= last {
        commits.push(CommitEvent {
            author_id: "dev".into(),
            timestamp: t,
        });
        t = t.plus_days(30);
    }
    RepoSnapshot {
        owner_login: owner.into(),
        repo_name: name.into(),
        owner_kind: OwnerKind::User,
        primary_language: "Rust".into(),
        domain_label: None,
        star_count: 10,
        size_loc: 0,
        commits,
        issues: vec![],
        pulls: vec![],
        forks: vec![],
        releases: vec![],
        owner_stats: OwnerStats::default(),
        repo_files: vec![],
        labels: vec![],
        homepage_url: None,
        readme_text: String::new(),
        fetched_at: last.plus_days(1),
    }
}

/// Eight constant trees, `active` of which vote active for any input.
pub fn bundle(active: usize) -> ModelBundle {
    let leaf = |c: Class| DecisionTree {
        nodes: vec![Node::Leaf {
            counts: if c == Class::Active { [0, 1] } else { [1, 0] },
        }],
        oob_indices: vec![],
    };
    let trees = (0..8)
        .map(|i| leaf(if i < active { Class::Active } else { Class::Unmaintained }))
        .collect();
    let forest = Forest {
        trees,
        column_names: data_point_names(DEFAULT_SCENARIO),
        config: ForestConfig {
            n_trees: 8,
            ..ForestConfig::default()
        },
        class_order: Class::ORDER,
    };
    ModelBundle::new(
        forest,
        DEFAULT_SCENARIO,
        AnchorPolicy::LastCommit,
        Quartiles::new(48.0, 82.0, 97.0).unwrap(),
    )
}

pub const GOLDEN_LEVELS: [&str; 5] = ["high", "fair", "borderline", "unmaintained", "not_analysed"];

/// Golden badge for `level`, with the placeholder version filled in.
pub fn golden(level: &str, model_version: &str) -> serde_json::Value {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join(format!("tests/golden/{level}.json"));
    let text = std::fs::read_to_string(&path).unwrap();
    serde_json::from_str(&text.replace("$MODEL_VERSION", model_version)).unwrap()
}

/// Active votes out of eight and repository for each golden level:
/// 8/8 gives LMA 100, 7/8 gives 75, 5/8 gives 25, 2/8 is unmaintained, and
/// `young` has too little history.
pub fn golden_case(level: &str) -> (usize, &'static str) {
    match level {
        "high" => (8, "old"),
        "fair" => (7, "old"),
        "borderline" => (5, "old"),
        "unmaintained" => (2, "old"),
        "not_analysed" => (8, "young"),
        other => panic!("no golden case {other}"),
    }
}

pub fn old_repo() -> RepoSnapshot {
    snapshot("acme", "old", Timestamp::ymd(2014, 1, 1), Timestamp::ymd(2018, 1, 1))
}

pub fn young_repo() -> RepoSnapshot {
    snapshot("acme", "young", Timestamp::ymd(2017, 6, 1), Timestamp::ymd(2018, 1, 1))
}
