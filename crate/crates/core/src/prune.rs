//! Correlation pruning of data points.
//!
//! Columns are clustered by complete linkage on `1 − |ρ|` (Spearman) and the
//! dendrogram is cut at `1 − threshold`, so every pair inside a cluster has
//! `|ρ| ≥ threshold`. Each multi-member cluster keeps its earliest column.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{pearson_of_ranks, rank_average};

pub const DEFAULT_THRESHOLD: f64 = 0.7;

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    pub column_names: Vec<String>,
    pub rho: Vec<Vec<f64>>,
    /// Constant columns; their ρ against every other column is reported as 0.
    pub zero_variance: Vec<bool>,
}

impl CorrelationMatrix {
    pub fn len(&self) -> usize {
        self.column_names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.column_names.is_empty()
    }
}

/// Pairwise Spearman ρ between the columns of `rows`.
///
/// Rows are put in a canonical order first, so the result does not depend on
/// the order in which rows are supplied.
pub fn correlation_matrix(column_names: &[String], rows: &[Vec<f64>]) -> Result<CorrelationMatrix> {
    if rows.len() < 3 {
        return Err(Error::TooFewRows {
            needed: 3,
            got: rows.len(),
        });
    }
    let p = column_names.len();
    if let Some(bad) = rows.iter().position(|r| r.len() != p) {
        return Err(Error::ColumnMismatch(format!(
            "row {bad} has {} values, expected {p}",
            rows[bad].len()
        )));
    }
    let mut ordered: Vec<&Vec<f64>> = rows.iter().collect();
    ordered.sort_by(|a, b| {
        a.iter()
            .zip(b.iter())
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let ranks: Vec<Vec<f64>> = (0..p)
        .map(|j| rank_average(&ordered.iter().map(|r| r[j]).collect::<Vec<_>>()))
        .collect();
    let zero_variance: Vec<bool> = ranks
        .iter()
        .map(|r| r.iter().all(|v| *v == r[0]))
        .collect();

    let mut rho = vec![vec![0.0; p]; p];
    for i in 0..p {
        rho[i][i] = 1.0;
        for j in i + 1..p {
            let v = pearson_of_ranks(&ranks[i], &ranks[j]).unwrap_or(0.0);
            rho[i][j] = v;
            rho[j][i] = v;
        }
    }
    Ok(CorrelationMatrix {
        column_names: column_names.to_vec(),
        rho,
        zero_variance,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum Removal {
    Correlated { representative: String },
    ZeroVariance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Removed {
    pub column: String,
    #[serde(flatten)]
    pub removal: Removal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PruneReport {
    pub kept: Vec<String>,
    pub removed: Vec<Removed>,
    pub threshold: f64,
    /// Multi-member clusters as column indices, representative first.
    #[serde(skip)]
    pub clusters: Vec<Vec<usize>>,
}

impl PruneReport {
    /// `column,status,representative`, one row per input column in input order.
    pub fn write_csv<W: Write>(&self, columns: &[String], out: W) -> Result<()> {
        let ctx = |source| Error::Csv {
            context: "prune report".into(),
            source,
        };
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["column", "status", "representative"]).map_err(ctx)?;
        for c in columns {
            if self.kept.contains(c) {
                w.write_record([c.as_str(), "kept", ""]).map_err(ctx)?;
            } else if let Some(r) = self.removed.iter().find(|r| &r.column == c) {
                match &r.removal {
                    Removal::Correlated { representative } => {
                        w.write_record([c.as_str(), "removed", representative.as_str()])
                    }
                    Removal::ZeroVariance => w.write_record([c.as_str(), "zero_variance", ""]),
                }
                .map_err(ctx)?;
            }
        }
        w.flush().map_err(|e| Error::Csv {
            context: "prune report".into(),
            source: e.into(),
        })
    }
}

/// Complete-linkage clustering on `1 − |ρ|`, cut at `1 − threshold`.
///
/// Merging proceeds greedily by the most similar pair of clusters, where the
/// similarity of two clusters is the smallest `|ρ|` across their members.
/// Ties go to the pair whose clusters start earliest in column order.
/// Zero-variance columns are removed outright unless every column is
/// constant, in which case the first column is kept.
pub fn cluster_and_select(cm: &CorrelationMatrix, threshold: f64) -> PruneReport {
    let p = cm.len();
    let mut removed = Vec::new();
    let live: Vec<usize> = (0..p).filter(|&i| !cm.zero_variance[i]).collect();
    let live = if live.is_empty() && p > 0 { vec![0] } else { live };
    for i in 0..p {
        if !live.contains(&i) {
            removed.push(Removed {
                column: cm.column_names[i].clone(),
                removal: Removal::ZeroVariance,
            });
        }
    }

    let mut clusters: Vec<Vec<usize>> = live.iter().map(|&i| vec![i]).collect();
    // similarity[a][b] between current clusters a and b.
    let mut sim: Vec<Vec<f64>> = live
        .iter()
        .map(|&i| live.iter().map(|&j| cm.rho[i][j].abs()).collect())
        .collect();
    loop {
        let mut best: Option<(usize, usize, f64)> = None;
        for a in 0..clusters.len() {
            for b in a + 1..clusters.len() {
                let s = sim[a][b];
                if s >= threshold && best.is_none_or(|(_, _, bs)| s > bs) {
                    best = Some((a, b, s));
                }
            }
        }
        let Some((a, b, _)) = best else { break };
        for c in 0..clusters.len() {
            let merged = sim[a][c].min(sim[b][c]);
            sim[a][c] = merged;
            sim[c][a] = merged;
        }
        sim[a][a] = 1.0;
        let moved = clusters.remove(b);
        clusters[a].extend(moved);
        clusters[a].sort_unstable();
        sim.remove(b);
        for row in &mut sim {
            row.remove(b);
        }
    }

    let mut kept_idx: Vec<usize> = clusters.iter().map(|c| c[0]).collect();
    kept_idx.sort_unstable();
    for cluster in &clusters {
        for &member in &cluster[1..] {
            removed.push(Removed {
                column: cm.column_names[member].clone(),
                removal: Removal::Correlated {
                    representative: cm.column_names[cluster[0]].clone(),
                },
            });
        }
    }
    removed.sort_by_key(|r| cm.column_names.iter().position(|c| *c == r.column));
    PruneReport {
        kept: kept_idx.iter().map(|&i| cm.column_names[i].clone()).collect(),
        removed,
        threshold,
        clusters: clusters.into_iter().filter(|c| c.len() > 1).collect(),
    }
}

/// Correlation matrix and clustering in one step.
pub fn prune(column_names: &[String], rows: &[Vec<f64>], threshold: f64) -> Result<PruneReport> {
    Ok(cluster_and_select(&correlation_matrix(column_names, rows)?, threshold))
}
