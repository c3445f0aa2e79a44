//! Permutation importance (mean decrease in accuracy) on out-of-bag rows.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::Forest;
use crate::dataset::Class;
use crate::error::{Error, Result};
use crate::features::period_tag;
use crate::seed::derive_seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceEntry {
    pub name: String,
    /// Interval tag such as `T22_24`, when the name carries one.
    pub period: Option<String>,
    /// Mean decrease in accuracy, in percentage points.
    pub mda: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceReport {
    /// Sorted by descending MDA; ties keep column order.
    pub entries: Vec<ImportanceEntry>,
}

impl ImportanceReport {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.entries.iter().find(|e| e.name == name).map(|e| e.mda)
    }
}

/// For every column and tree: OOB accuracy minus OOB accuracy after shuffling
/// that column among the tree's OOB rows. The MDA of a column is the mean of
/// these decreases over trees, times 100. Not scaled by standard deviation.
///
/// `rows` and `labels` must be the rows the forest was trained on.
pub fn mda_importance(
    forest: &Forest,
    rows: &[Vec<f64>],
    labels: &[Class],
    seed: u64,
) -> Result<ImportanceReport> {
    if rows.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if rows.len() != labels.len() {
        return Err(Error::LengthMismatch(rows.len(), labels.len()));
    }
    if let Some(tree) = forest.trees.iter().position(|t| t.oob_indices.is_empty()) {
        return Err(Error::NoOobRows { tree });
    }
    let p = forest.column_names.len();
    if rows.iter().any(|r| r.len() != p) {
        return Err(Error::ColumnMismatch("rows do not match forest columns".into()));
    }

    let per_tree: Vec<Vec<f64>> = forest
        .trees
        .par_iter()
        .enumerate()
        .map(|(t, tree)| {
            let oob = &tree.oob_indices;
            let total = oob.len() as f64;
            let baseline = oob.iter().filter(|&&i| tree.predict(&rows[i]) == labels[i]).count();
            let tree_seed = derive_seed(seed, t as u64);
            let mut scratch = Vec::with_capacity(p);
            (0..p)
                .map(|j| {
                    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(tree_seed, j as u64));
                    let mut shuffled: Vec<f64> = oob.iter().map(|&i| rows[i][j]).collect();
                    shuffled.shuffle(&mut rng);
                    let permuted = oob
                        .iter()
                        .zip(&shuffled)
                        .filter(|(&i, &v)| {
                            scratch.clear();
                            scratch.extend_from_slice(&rows[i]);
                            scratch[j] = v;
                            tree.predict(&scratch) == labels[i]
                        })
                        .count();
                    (baseline as f64 - permuted as f64) / total
                })
                .collect()
        })
        .collect();

    let n_trees = per_tree.len() as f64;
    let mut entries: Vec<ImportanceEntry> = forest
        .column_names
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let mean = per_tree.iter().map(|d| d[j]).sum::<f64>() / n_trees;
            ImportanceEntry {
                name: name.clone(),
                period: period_tag(name).map(String::from),
                mda: 100.0 * mean,
            }
        })
        .collect();
    entries.sort_by(|a, b| b.mda.total_cmp(&a.mda));
    Ok(ImportanceReport { entries })
}
