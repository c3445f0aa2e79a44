//! Decision-forest classifier.
//!
//! Each tree is grown on a bootstrap sample of the training rows with a
//! per-tree seed derived from the forest seed, choosing at every node the Gini
//! best split over `mtry` random columns. A prediction is the fraction of trees
//! whose leaf majority is [`Class::Active`].

mod importance;
mod tree;

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use importance::{mda_importance, ImportanceEntry, ImportanceReport};
pub use tree::{DecisionTree, Node};

use crate::dataset::{Class, Dataset};
use crate::error::{Error, Result};
use crate::seed::derive_seed;

pub const FOREST_SCHEMA: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestConfig {
    pub n_trees: usize,
    /// Candidate columns per split; `None` means `floor(sqrt(#columns))`.
    pub mtry: Option<usize>,
    pub min_leaf: usize,
    pub max_depth: Option<usize>,
    /// Disabled only to obtain a single deterministic CART tree.
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_trees: 100,
            mtry: None,
            min_leaf: 1,
            max_depth: None,
            bootstrap: true,
            seed: 0,
        }
    }
}

impl ForestConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn resolved_mtry(&self, n_columns: usize) -> usize {
        self.mtry
            .unwrap_or_else(|| ((n_columns as f64).sqrt().floor() as usize).max(1))
    }

    fn validate(&self, n_columns: usize) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::InvalidConfig("n_trees must be at least 1".into()));
        }
        if self.min_leaf == 0 {
            return Err(Error::InvalidConfig("min_leaf must be at least 1".into()));
        }
        let mtry = self.resolved_mtry(n_columns);
        if mtry == 0 || mtry > n_columns {
            return Err(Error::InvalidConfig(format!(
                "mtry {mtry} outside 1..={n_columns}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    /// Fraction of trees voting active.
    pub p_active: f64,
    pub label: Class,
    pub active_votes: usize,
    pub n_trees: usize,
}

impl Prediction {
    pub fn from_votes(active_votes: usize, n_trees: usize) -> Prediction {
        Prediction {
            p_active: active_votes as f64 / n_trees as f64,
            // A tied ensemble counts as active.
            label: if 2 * active_votes >= n_trees {
                Class::Active
            } else {
                Class::Unmaintained
            },
            active_votes,
            n_trees,
        }
    }

    pub fn p_unmaintained(&self) -> f64 {
        (self.n_trees - self.active_votes) as f64 / self.n_trees as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub trees: Vec<DecisionTree>,
    pub column_names: Vec<String>,
    pub config: ForestConfig,
    pub class_order: [Class; 2],
}

#[derive(Serialize)]
struct ForestDocRef<'a> {
    schema: u32,
    #[serde(flatten)]
    forest: &'a Forest,
}

#[derive(Deserialize)]
struct ForestDoc {
    schema: u32,
    #[serde(flatten)]
    forest: Forest,
}

/// Trains a forest on labeled rows.
pub fn train_forest(
    column_names: &[String],
    rows: &[Vec<f64>],
    labels: &[Class],
    cfg: &ForestConfig,
) -> Result<Forest> {
    if rows.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if rows.len() != labels.len() {
        return Err(Error::LengthMismatch(rows.len(), labels.len()));
    }
    if rows.len() < 2 {
        return Err(Error::TooFewRows {
            needed: 2,
            got: rows.len(),
        });
    }
    let p = column_names.len();
    if p == 0 {
        return Err(Error::ColumnMismatch("no columns".into()));
    }
    if let Some(bad) = rows.iter().position(|r| r.len() != p) {
        return Err(Error::ColumnMismatch(format!(
            "row {bad} has {} values, expected {p}",
            rows[bad].len()
        )));
    }
    if !labels.contains(&Class::Active) || !labels.contains(&Class::Unmaintained) {
        return Err(Error::SingleClass);
    }
    cfg.validate(p)?;
    let params = tree::TreeParams {
        mtry: cfg.resolved_mtry(p),
        min_leaf: cfg.min_leaf,
        max_depth: cfg.max_depth,
    };
    let n = rows.len();
    let trees = (0..cfg.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, t as u64));
            let (sample, oob_indices) = if cfg.bootstrap {
                let sample: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
                let mut drawn = vec![false; n];
                for &i in &sample {
                    drawn[i] = true;
                }
                let oob = (0..n).filter(|&i| !drawn[i]).collect();
                (sample, oob)
            } else {
                ((0..n).collect(), Vec::new())
            };
            DecisionTree {
                nodes: tree::grow(rows, labels, sample, &params, &mut rng),
                oob_indices,
            }
        })
        .collect();
    Ok(Forest {
        trees,
        column_names: column_names.to_vec(),
        config: cfg.clone(),
        class_order: Class::ORDER,
    })
}

/// Trains on every labeled row of `ds`.
pub fn train_on(ds: &Dataset, cfg: &ForestConfig) -> Result<Forest> {
    let labeled = ds.labeled();
    train_forest(&labeled.columns, &labeled.rows, &labeled.classes()?, cfg)
}

impl Forest {
    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    /// Vote share for a row laid out in `column_names` order.
    pub fn predict_proba(&self, row: &[f64]) -> Result<Prediction> {
        if row.len() != self.column_names.len() {
            return Err(Error::ColumnMismatch(format!(
                "row has {} values, forest expects {}",
                row.len(),
                self.column_names.len()
            )));
        }
        let votes = self
            .trees
            .iter()
            .filter(|t| t.predict(row) == Class::Active)
            .count();
        Ok(Prediction::from_votes(votes, self.trees.len()))
    }

    /// Vote share for named data points; extra names are ignored.
    pub fn predict_named(&self, names: &[String], values: &[f64]) -> Result<Prediction> {
        let index: HashMap<&str, usize> =
            names.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
        let row = self
            .column_names
            .iter()
            .map(|c| {
                index
                    .get(c.as_str())
                    .map(|&i| values[i])
                    .ok_or_else(|| Error::ColumnMismatch(format!("missing data point {c}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        self.predict_proba(&row)
    }

    /// Predictions for every row of `ds`, matching columns by name.
    pub fn predict_dataset(&self, ds: &Dataset) -> Result<Vec<Prediction>> {
        let projected = ds.select_columns(&self.column_names)?;
        projected.rows.iter().map(|r| self.predict_proba(r)).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string(&ForestDocRef {
            schema: FOREST_SCHEMA,
            forest: self,
        })
        .map_err(|source| Error::Json {
            context: "forest".into(),
            source,
        })?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Forest> {
        let doc: ForestDoc = serde_json::from_str(text).map_err(|source| Error::Json {
            context: "forest".into(),
            source,
        })?;
        if doc.schema != FOREST_SCHEMA {
            return Err(Error::malformed(
                "forest",
                "schema",
                format!("unsupported schema {}", doc.schema),
            ));
        }
        Ok(doc.forest)
    }
}
