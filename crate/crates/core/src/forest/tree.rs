//! CART-style classification tree over two classes.

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::Class;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Node {
    /// Rows with `value ≤ threshold` go left.
    Split {
        column: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    /// Training rows reaching the leaf, indexed by [`Class::index`].
    Leaf { counts: [u32; 2] },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<Node>,
    /// Training rows absent from this tree's bootstrap sample, ascending.
    pub oob_indices: Vec<usize>,
}

impl DecisionTree {
    /// Class counts of the leaf reached by `row`.
    pub fn leaf_counts(&self, row: &[f64]) -> [u32; 2] {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Split {
                    column,
                    threshold,
                    left,
                    right,
                } => at = if row[*column] <= *threshold { *left } else { *right },
                Node::Leaf { counts } => return *counts,
            }
        }
    }

    /// The leaf's majority class; ties go to [`Class::Unmaintained`].
    pub fn predict(&self, row: &[f64]) -> Class {
        let c = self.leaf_counts(row);
        if c[Class::Active.index()] > c[Class::Unmaintained.index()] {
            Class::Active
        } else {
            Class::Unmaintained
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match nodes[at] {
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
                Node::Leaf { .. } => 0,
            }
        }
        walk(&self.nodes, 0)
    }
}

pub(crate) struct TreeParams {
    pub mtry: usize,
    pub min_leaf: usize,
    pub max_depth: Option<usize>,
}

/// Weighted child impurity as an exact fraction `num / den`.
///
/// For two classes the size-weighted Gini impurity of a split is
/// proportional to `l0·l1/nl + r0·r1/nr`; keeping it as
/// `(l0·l1·nr + r0·r1·nl) / (nl·nr)` lets candidates be compared without
/// rounding.
#[derive(Clone, Copy)]
struct Score {
    num: u128,
    den: u128,
}

impl Score {
    fn split(left: [u64; 2], right: [u64; 2]) -> Score {
        let nl = u128::from(left[0] + left[1]);
        let nr = u128::from(right[0] + right[1]);
        Score {
            num: u128::from(left[0]) * u128::from(left[1]) * nr
                + u128::from(right[0]) * u128::from(right[1]) * nl,
            den: nl * nr,
        }
    }

    fn node(counts: [u64; 2]) -> Score {
        Score {
            num: u128::from(counts[0]) * u128::from(counts[1]),
            den: u128::from(counts[0] + counts[1]),
        }
    }

    fn lt(self, other: Score) -> bool {
        self.num * other.den < other.num * self.den
    }
}

struct Builder<'a, R> {
    rows: &'a [Vec<f64>],
    labels: &'a [Class],
    params: &'a TreeParams,
    n_columns: usize,
    rng: &'a mut R,
    nodes: Vec<Node>,
}

impl<R: Rng> Builder<'_, R> {
    fn counts(&self, idx: &[usize]) -> [u64; 2] {
        let mut c = [0u64; 2];
        for &i in idx {
            c[self.labels[i].index()] += 1;
        }
        c
    }

    fn build(&mut self, idx: Vec<usize>, depth: usize) -> usize {
        let counts = self.counts(&idx);
        let at = self.nodes.len();
        self.nodes.push(Node::Leaf {
            counts: [counts[0] as u32, counts[1] as u32],
        });
        let pure = counts[0] == 0 || counts[1] == 0;
        let depth_capped = self.params.max_depth.is_some_and(|d| depth >= d);
        if pure || depth_capped || idx.len() < 2 * self.params.min_leaf {
            return at;
        }
        let Some((column, threshold)) = self.best_split(&idx, counts) else {
            return at;
        };
        let (left, right): (Vec<usize>, Vec<usize>) =
            idx.into_iter().partition(|&i| self.rows[i][column] <= threshold);
        let l = self.build(left, depth + 1);
        let r = self.build(right, depth + 1);
        self.nodes[at] = Node::Split {
            column,
            threshold,
            left: l,
            right: r,
        };
        at
    }

    /// Best split over `mtry` randomly drawn columns, visited in ascending
    /// column order; the first strictly best candidate wins. Only splits that
    /// strictly reduce impurity and leave `min_leaf` rows on each side count.
    fn best_split(&mut self, idx: &[usize], counts: [u64; 2]) -> Option<(usize, f64)> {
        let mut columns = sample(self.rng, self.n_columns, self.params.mtry).into_vec();
        columns.sort_unstable();
        let parent = Score::node(counts);
        let total = idx.len() as u64;
        let min_leaf = self.params.min_leaf as u64;

        let mut best: Option<(usize, f64, Score)> = None;
        let mut order: Vec<(f64, Class)> = Vec::with_capacity(idx.len());
        for column in columns {
            order.clear();
            order.extend(idx.iter().map(|&i| (self.rows[i][column], self.labels[i])));
            order.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut left = [0u64; 2];
            for k in 0..order.len() - 1 {
                left[order[k].1.index()] += 1;
                let (lo, hi) = (order[k].0, order[k + 1].0);
                if lo == hi {
                    continue;
                }
                let nl = (k + 1) as u64;
                if nl < min_leaf || total - nl < min_leaf {
                    continue;
                }
                let right = [counts[0] - left[0], counts[1] - left[1]];
                let score = Score::split(left, right);
                // Child impurity must be strictly below the parent's:
                // num/den < parent.num/parent.den, scaled by the node size.
                let improves = score.num * parent.den < parent.num * score.den;
                if improves && best.as_ref().is_none_or(|b| score.lt(b.2)) {
                    best = Some((column, (lo + hi) / 2.0, score));
                }
            }
        }
        best.map(|(c, t, _)| (c, t))
    }
}

/// Grows one tree on the rows listed in `sample_idx` (duplicates allowed).
pub(crate) fn grow<R: Rng>(
    rows: &[Vec<f64>],
    labels: &[Class],
    sample_idx: Vec<usize>,
    params: &TreeParams,
    rng: &mut R,
) -> Vec<Node> {
    let mut builder = Builder {
        rows,
        labels,
        params,
        n_columns: rows[0].len(),
        rng,
        nodes: Vec::new(),
    };
    builder.build(sample_idx, 0);
    builder.nodes
}
