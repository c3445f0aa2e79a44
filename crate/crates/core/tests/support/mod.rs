//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use repo_vitals::Class;

fn q(n: usize, d: usize) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Plain CART: Gini impurity as exact fractions, every column considered,
/// midpoint thresholds, first best split in (column, threshold) order.
pub enum Cart {
    Leaf(Class),
    Split(usize, f64, Box<Cart>, Box<Cart>),
}

fn gini(labels: &[Class]) -> BigRational {
    let n = labels.len();
    let u = labels.iter().filter(|c| **c == Class::Unmaintained).count();
    BigRational::one() - q(u, n) * q(u, n) - q(n - u, n) * q(n - u, n)
}

impl Cart {
    pub fn fit(rows: &[Vec<f64>], labels: &[Class]) -> Cart {
        let u = labels.iter().filter(|c| **c == Class::Unmaintained).count();
        let leaf = Cart::Leaf(if 2 * u >= labels.len() { Class::Unmaintained } else { Class::Active });
        if u == 0 || u == labels.len() {
            return leaf;
        }
        let n = labels.len();
        let parent = gini(labels);
        let mut best: Option<(BigRational, usize, f64)> = None;
        for col in 0..rows[0].len() {
            let mut values: Vec<f64> = rows.iter().map(|r| r[col]).collect();
            values.sort_by(f64::total_cmp);
            values.dedup();
            for w in values.windows(2) {
                let t = (w[0] + w[1]) / 2.0;
                let (l, r): (Vec<Class>, Vec<Class>) = {
                    let mut l = Vec::new();
                    let mut r = Vec::new();
                    for (row, c) in rows.iter().zip(labels) {
                        if row[col] <= t { l.push(*c) } else { r.push(*c) }
                    }
                    (l, r)
                };
                let weighted = q(l.len(), n) * gini(&l) + q(r.len(), n) * gini(&r);
                if weighted < parent && best.as_ref().is_none_or(|b| weighted < b.0) {
                    best = Some((weighted, col, t));
                }
            }
        }
        let Some((_, col, t)) = best else {
            return leaf;
        };
        let mut parts = [(Vec::new(), Vec::new()), (Vec::new(), Vec::new())];
        for (row, c) in rows.iter().zip(labels) {
            let side = usize::from(row[col] > t);
            parts[side].0.push(row.clone());
            parts[side].1.push(*c);
        }
        let [(lr, ll), (rr, rl)] = parts;
        Cart::Split(col, t, Box::new(Cart::fit(&lr, &ll)), Box::new(Cart::fit(&rr, &rl)))
    }

    pub fn predict(&self, row: &[f64]) -> Class {
        match self {
            Cart::Leaf(c) => *c,
            Cart::Split(col, t, l, r) => {
                if row[*col] <= *t { l.predict(row) } else { r.predict(row) }
            }
        }
    }
}

/// Pairwise probability that a positive outscores a negative, ties ½.
pub fn brute_auc(pos: &[f64], neg: &[f64]) -> f64 {
    let mut twice = 0u64;
    for p in pos {
        for n in neg {
            twice += if p > n { 2 } else if p == n { 1 } else { 0 };
        }
    }
    twice as f64 / (2 * pos.len() * neg.len()) as f64
}

/// Cohen's kappa from observed and marginal-based expected agreement.
pub fn marginal_kappa(tp: u64, fp: u64, fn_: u64, tn: u64) -> f64 {
    let n = (tp + fp + fn_ + tn) as f64;
    let observed = (tp + tn) as f64 / n;
    let pred_pos = (tp + fp) as f64 / n;
    let true_pos = (tp + fn_) as f64 / n;
    let expected = pred_pos * true_pos + (1.0 - pred_pos) * (1.0 - true_pos);
    (observed - expected) / (1.0 - expected)
}

pub fn brute_delta(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0i64;
    for x in a {
        for y in b {
            s += (x > y) as i64 - (x < y) as i64;
        }
    }
    s as f64 / (a.len() * b.len()) as f64
}

/// Fraction of durations strictly greater than `t`, as an exact fraction.
pub fn empirical_survival(durations: &[f64], t: f64) -> BigRational {
    let above = durations.iter().filter(|&&d| d > t).count();
    if above == 0 {
        return BigRational::zero();
    }
    q(above, durations.len())
}

pub fn rational(n: usize, d: usize) -> BigRational {
    q(n, d)
}
