//! Repository maintenance analytics.
//!
//! The crate turns repository event histories ([`snapshot::RepoSnapshot`]) into
//! windowed temporal feature matrices, prunes correlated data points, trains a
//! vote-counting decision forest that separates maintained from unmaintained
//! projects, and derives the Level of Maintenance Activity (LMA) from the
//! forest's vote share. Survival, effect-size and contribution-practice
//! analyses operate over whole corpora.

pub mod dataset;
pub mod error;
pub mod evaluate;
pub mod features;
pub mod forest;
pub mod lma;
pub mod practices;
pub mod prune;
pub mod seed;
pub mod snapshot;
pub mod stats;
pub mod survival;
pub mod synth;
pub mod time;

pub use dataset::{Class, Dataset};
pub use error::{Error, Result};
pub use features::{AnchorPolicy, Feature, FeatureMatrix, Scenario};
pub use forest::{Forest, ForestConfig, Prediction};
pub use snapshot::{Corpus, CorpusEntry, Label, RepoSnapshot};
pub use time::Timestamp;
