mod support;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use repo_vitals::evaluate::{auc, compute_metrics, ConfusionCounts};
use repo_vitals::forest::{train_forest, ForestConfig};
use repo_vitals::stats::{cliffs_delta, mann_whitney_u, Alternative};
use repo_vitals::survival::{kaplan_meier, LifetimeSample};
use repo_vitals::Class;
use support::*;

fn random_dataset(rng: &mut ChaCha8Rng, n: usize, p: usize) -> (Vec<Vec<f64>>, Vec<Class>) {
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..p).map(|_| rng.random_range(0..12) as f64).collect())
        .collect();
    let labels = rows
        .iter()
        .map(|r| {
            let signal = r[0] + r[1] + rng.random_range(0.0..8.0);
            if signal > 14.0 { Class::Active } else { Class::Unmaintained }
        })
        .collect();
    (rows, labels)
}

#[test]
fn single_tree_matches_plain_cart() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..20 {
        let (rows, labels) = random_dataset(&mut rng, 100, 5);
        let names: Vec<String> = (0..5).map(|i| format!("x{i}")).collect();
        let cfg = ForestConfig {
            n_trees: 1,
            mtry: Some(5),
            bootstrap: false,
            ..ForestConfig::default()
        };
        let forest = train_forest(&names, &rows, &labels, &cfg).unwrap();
        let oracle = Cart::fit(&rows, &labels);
        let probes: Vec<Vec<f64>> = (0..100)
            .map(|_| (0..5).map(|_| rng.random_range(-1..14) as f64).collect())
            .collect();
        for row in rows.iter().chain(&probes) {
            assert_eq!(forest.trees[0].predict(row), oracle.predict(row));
            assert_eq!(forest.predict_proba(row).unwrap().label, oracle.predict(row));
        }
    }
}

#[test]
fn auc_matches_pairs_and_u() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..50 {
        let n = rng.random_range(2..=500);
        let scores: Vec<(f64, Class)> = (0..n)
            .map(|i| {
                let c = if i == 0 { Class::Unmaintained } else if i == 1 { Class::Active } else if rng.random_bool(0.3) { Class::Unmaintained } else { Class::Active };
                (rng.random_range(0..40) as f64 / 40.0, c)
            })
            .collect();
        let pos: Vec<f64> = scores.iter().filter(|s| s.1 == Class::Unmaintained).map(|s| s.0).collect();
        let neg: Vec<f64> = scores.iter().filter(|s| s.1 == Class::Active).map(|s| s.0).collect();
        let a = auc(&scores).unwrap();
        assert!((a - brute_auc(&pos, &neg)).abs() <= 1e-12);
        let u = mann_whitney_u(&pos, &neg, Alternative::TwoSided).unwrap().statistic;
        assert!((a - u / (pos.len() * neg.len()) as f64).abs() <= 1e-12);
    }
}

#[test]
fn kappa_matches_marginal_formula() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..20 {
        let cc = ConfusionCounts {
            tp: rng.random_range(1..200),
            fp: rng.random_range(1..200),
            fn_: rng.random_range(1..200),
            tn: rng.random_range(1..200),
        };
        let scores = vec![(0.0, Class::Active); cc.total() as usize];
        let m = compute_metrics(&cc, &scores).unwrap();
        assert!((m.kappa.unwrap() - marginal_kappa(cc.tp, cc.fp, cc.fn_, cc.tn)).abs() <= 1e-12);
    }
}

#[test]
fn delta_matches_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..30 {
        let a: Vec<f64> = (0..rng.random_range(1..=200)).map(|_| rng.random_range(0..30) as f64).collect();
        let b: Vec<f64> = (0..rng.random_range(1..=200)).map(|_| rng.random_range(0..30) as f64).collect();
        assert!((cliffs_delta(&a, &b).unwrap().d - brute_delta(&a, &b)).abs() <= 1e-12);
    }
}

#[test]
fn km_matches_empirical() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for n in [1, 10, 250, 1000] {
        let d: Vec<f64> = (0..n).map(|_| rng.random_range(1..100) as f64 / 4.0).collect();
        let samples: Vec<LifetimeSample> =
            d.iter().enumerate().map(|(i, &x)| LifetimeSample::new(format!("r/{i}"), x, true)).collect();
        let curve = kaplan_meier(&samples).unwrap();
        for s in &curve.steps {
            assert_eq!(s.exact, empirical_survival(&d, s.t));
        }
    }
}
