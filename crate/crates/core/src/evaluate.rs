//! Stratified cross-validation, classification metrics, and baselines.
//!
//! The unmaintained class is the positive class for every metric, and the
//! score used for AUC is the predicted probability of being unmaintained.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{Class, Dataset};
use crate::error::{Error, Result};
use crate::features::{AnchorPolicy, Scenario};
use crate::forest::{train_forest, ForestConfig};
use crate::prune::{prune, DEFAULT_THRESHOLD};
use crate::seed::derive_seed;
use crate::snapshot::Corpus;
use crate::stats::rank_average;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionCounts {
    pub fn from_predictions(truth: &[Class], predicted: &[Class]) -> Result<ConfusionCounts> {
        if truth.len() != predicted.len() {
            return Err(Error::LengthMismatch(truth.len(), predicted.len()));
        }
        let mut cc = ConfusionCounts::default();
        for (t, p) in truth.iter().zip(predicted) {
            match (t, p) {
                (Class::Unmaintained, Class::Unmaintained) => cc.tp += 1,
                (Class::Active, Class::Unmaintained) => cc.fp += 1,
                (Class::Unmaintained, Class::Active) => cc.fn_ += 1,
                (Class::Active, Class::Active) => cc.tn += 1,
            }
        }
        Ok(cc)
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    /// Cohen's kappa from the 2×2 table, or `None` when chance agreement is 1.
    ///
    /// Computed as `(N·agree − Σ marginals) / (N² − Σ marginals)` in integers so
    /// that a constant classifier gives exactly zero.
    pub fn kappa(&self) -> Option<f64> {
        let (tp, fp, fn_, tn) = (
            i128::from(self.tp),
            i128::from(self.fp),
            i128::from(self.fn_),
            i128::from(self.tn),
        );
        let n = tp + fp + fn_ + tn;
        let chance = (tp + fp) * (tp + fn_) + (fn_ + tn) * (fp + tn);
        let den = n * n - chance;
        (den != 0).then(|| (n * (tp + tn) - chance) as f64 / den as f64)
    }
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den != 0).then(|| num as f64 / den as f64)
}

/// The six metrics; `None` marks a metric whose denominator is zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f_measure: Option<f64>,
    pub accuracy: Option<f64>,
    pub auc: Option<f64>,
    pub kappa: Option<f64>,
}

pub const METRIC_COLUMNS: [&str; 6] = ["precision", "recall", "f_measure", "accuracy", "auc", "kappa"];

impl Metrics {
    pub fn values(&self) -> [Option<f64>; 6] {
        [
            self.precision,
            self.recall,
            self.f_measure,
            self.accuracy,
            self.auc,
            self.kappa,
        ]
    }

    fn from_values(v: [Option<f64>; 6]) -> Metrics {
        Metrics {
            precision: v[0],
            recall: v[1],
            f_measure: v[2],
            accuracy: v[3],
            auc: v[4],
            kappa: v[5],
        }
    }

    /// Per-metric mean over the runs where that metric is defined.
    pub fn mean(runs: &[Metrics]) -> Metrics {
        let mut out = [None; 6];
        for (j, slot) in out.iter_mut().enumerate() {
            let defined: Vec<f64> = runs.iter().filter_map(|m| m.values()[j]).collect();
            if !defined.is_empty() {
                *slot = Some(defined.iter().sum::<f64>() / defined.len() as f64);
            }
        }
        Metrics::from_values(out)
    }
}

/// Probability that a random unmaintained row outscores a random active row,
/// ties counting one half. `scores` pairs `p_unmaintained` with the truth.
pub fn auc(scores: &[(f64, Class)]) -> Option<f64> {
    let values: Vec<f64> = scores.iter().map(|s| s.0).collect();
    let ranks = rank_average(&values);
    let mut pos = 0u64;
    let mut doubled_rank_sum = 0u64;
    for (r, (_, class)) in ranks.iter().zip(scores) {
        if *class == Class::Unmaintained {
            pos += 1;
            doubled_rank_sum += (2.0 * r) as u64;
        }
    }
    let neg = scores.len() as u64 - pos;
    if pos == 0 || neg == 0 {
        return None;
    }
    // 2U = 2R − pos·(pos + 1), all integral.
    let doubled_u = doubled_rank_sum - pos * (pos + 1);
    Some(doubled_u as f64 / (2 * pos * neg) as f64)
}

pub fn compute_metrics(cc: &ConfusionCounts, scores: &[(f64, Class)]) -> Result<Metrics> {
    if cc.total() != scores.len() as u64 {
        return Err(Error::LengthMismatch(cc.total() as usize, scores.len()));
    }
    let precision = ratio(cc.tp, cc.tp + cc.fp);
    let recall = ratio(cc.tp, cc.tp + cc.fn_);
    let f_measure = match (precision, recall) {
        // 2PR/(P+R) rewritten over counts; zero when P = R = 0.
        (Some(_), Some(_)) => ratio(2 * cc.tp, 2 * cc.tp + cc.fp + cc.fn_),
        _ => None,
    };
    Ok(Metrics {
        precision,
        recall,
        f_measure,
        accuracy: ratio(cc.tp + cc.tn, cc.total()),
        auc: auc(scores),
        kappa: cc.kappa(),
    })
}

/// Metrics for predicted `(label, p_unmaintained)` pairs against the truth.
pub fn metrics_for(truth: &[Class], predicted: &[(Class, f64)]) -> Result<Metrics> {
    let labels: Vec<Class> = predicted.iter().map(|p| p.0).collect();
    let cc = ConfusionCounts::from_predictions(truth, &labels)?;
    let scores: Vec<(f64, Class)> = predicted.iter().zip(truth).map(|(p, t)| (p.1, *t)).collect();
    compute_metrics(&cc, &scores)
}

/// Splits row indices into `k` folds, each class dealt round-robin after a
/// seeded shuffle. Unmaintained rows are dealt first and active rows continue
/// from the next fold so fold sizes also differ by at most one.
pub fn stratified_kfold(labels: &[Class], k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::InvalidConfig(format!("k must be at least 2, got {k}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = vec![Vec::new(); k];
    let mut next = 0;
    for class in Class::ORDER {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if members.len() < k {
            return Err(Error::TooFewPerClass {
                class: class.as_str(),
                count: members.len(),
                k,
            });
        }
        members.shuffle(&mut rng);
        for i in members {
            folds[next].push(i);
            next = (next + 1) % k;
        }
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Baseline {
    /// Every row predicted unmaintained.
    AllUnmaintained,
    /// Seeded fair coin per row.
    Random,
}

impl Baseline {
    pub const ALL: [Baseline; 2] = [Baseline::AllUnmaintained, Baseline::Random];

    pub fn as_str(self) -> &'static str {
        match self {
            Baseline::AllUnmaintained => "all_unmaintained",
            Baseline::Random => "random",
        }
    }
}

pub fn baseline_metrics(truth: &[Class], kind: Baseline, seed: u64) -> Result<Metrics> {
    if truth.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let predicted: Vec<(Class, f64)> = match kind {
        Baseline::AllUnmaintained => vec![(Class::Unmaintained, 1.0); truth.len()],
        Baseline::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..truth.len())
                .map(|_| {
                    if rng.random_bool(0.5) {
                        (Class::Unmaintained, 1.0)
                    } else {
                        (Class::Active, 0.0)
                    }
                })
                .collect()
        }
    };
    metrics_for(truth, &predicted)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub folds: usize,
    pub rounds: usize,
    pub seed: u64,
    /// `None` disables correlation pruning.
    pub prune_threshold: Option<f64>,
    pub anchor: AnchorPolicy,
    pub forest: ForestConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            folds: 5,
            rounds: 100,
            seed: 0,
            prune_threshold: Some(DEFAULT_THRESHOLD),
            anchor: AnchorPolicy::LastCommit,
            forest: ForestConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub scenario: Scenario,
    pub rounds: Vec<Metrics>,
    pub mean: Metrics,
}

fn fmt_metric(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{x:.6}"),
        None => "undefined".into(),
    }
}

fn write_metric_rows<W: Write>(first: &str, rows: &[(String, Metrics)], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |source| Error::Csv {
        context: "metrics".into(),
        source,
    };
    let mut header = vec![first];
    header.extend(METRIC_COLUMNS);
    w.write_record(&header).map_err(csv_err)?;
    for (key, m) in rows {
        let mut record = vec![key.clone()];
        record.extend(m.values().into_iter().map(fmt_metric));
        w.write_record(&record).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io("metrics", e))
}

impl ExperimentResult {
    /// One row per round (numbered from 1) and a final `mean` row.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut rows: Vec<(String, Metrics)> = self
            .rounds
            .iter()
            .enumerate()
            .map(|(i, m)| ((i + 1).to_string(), *m))
            .collect();
        rows.push(("mean".into(), self.mean));
        write_metric_rows("round", &rows, out)
    }
}

pub fn write_baselines_csv<W: Write>(rows: &[(Baseline, Metrics)], out: W) -> Result<()> {
    let rows: Vec<(String, Metrics)> = rows.iter().map(|(b, m)| (b.as_str().to_string(), *m)).collect();
    write_metric_rows("baseline", &rows, out)
}

/// Extracts `scenario` from the corpus and cross-validates on labeled rows.
pub fn run_experiment(corpus: &Corpus, scenario: Scenario, cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    let ds = Dataset::from_corpus(corpus, scenario, cfg.anchor)?.labeled();
    run_experiment_on(&ds, scenario, cfg)
}

/// Cross-validates on a fully labeled dataset. Each round reshuffles the
/// folds; pruning and training see only the training folds, and test-fold
/// predictions are pooled into one set of metrics per round.
pub fn run_experiment_on(ds: &Dataset, scenario: Scenario, cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    if ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if cfg.rounds == 0 {
        return Err(Error::InvalidConfig("rounds must be at least 1".into()));
    }
    let labels = ds.classes()?;
    if !labels.contains(&Class::Active) || !labels.contains(&Class::Unmaintained) {
        return Err(Error::SingleClass);
    }
    let rounds = (0..cfg.rounds)
        .into_par_iter()
        .map(|r| run_round(ds, &labels, cfg, derive_seed(cfg.seed, r as u64)))
        .collect::<Result<Vec<Metrics>>>()?;
    Ok(ExperimentResult {
        scenario,
        mean: Metrics::mean(&rounds),
        rounds,
    })
}

fn run_round(ds: &Dataset, labels: &[Class], cfg: &ExperimentConfig, round_seed: u64) -> Result<Metrics> {
    let folds = stratified_kfold(labels, cfg.folds, derive_seed(round_seed, 0))?;
    let mut predicted = vec![(Class::Active, 0.0); ds.len()];
    for (f, test) in folds.iter().enumerate() {
        let train: Vec<usize> = folds
            .iter()
            .enumerate()
            .filter(|(g, _)| *g != f)
            .flat_map(|(_, idx)| idx.iter().copied())
            .collect();
        let train_ds = ds.subset(&train);
        let columns = match cfg.prune_threshold {
            Some(t) => prune(&train_ds.columns, &train_ds.rows, t)?.kept,
            None => ds.columns.clone(),
        };
        let train_ds = train_ds.select_columns(&columns)?;
        let train_labels: Vec<Class> = train.iter().map(|&i| labels[i]).collect();
        let forest_cfg = cfg.forest.clone().with_seed(derive_seed(round_seed, 1 + f as u64));
        let forest = train_forest(&columns, &train_ds.rows, &train_labels, &forest_cfg)?;
        let test_ds = ds.subset(test).select_columns(&columns)?;
        for (&i, row) in test.iter().zip(&test_ds.rows) {
            let p = forest.predict_proba(row)?;
            predicted[i] = (p.label, p.p_unmaintained());
        }
    }
    metrics_for(labels, &predicted)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::{prop, prop_assert, prop_assert_eq, proptest};

    fn classes(unmaintained: usize, active: usize) -> Vec<Class> {
        let mut v = vec![Class::Unmaintained; unmaintained];
        v.extend(vec![Class::Active; active]);
        v
    }

    #[test]
    fn fold_sizes_for_large_imbalanced_corpus() {
        let labels = classes(248, 754);
        let folds = stratified_kfold(&labels, 5, 42).unwrap();
        for f in &folds {
            assert!((200..=201).contains(&f.len()), "{}", f.len());
            let u = f.iter().filter(|&&i| labels[i] == Class::Unmaintained).count();
            assert!((49..=50).contains(&u));
        }
        let mut all: Vec<usize> = folds.concat();
        all.sort_unstable();
        assert_eq!(all, (0..labels.len()).collect::<Vec<_>>());
    }

    #[test]
    fn fold_edge_cases() {
        let folds = stratified_kfold(&classes(5, 5), 5, 1).unwrap();
        assert!(folds.iter().all(|f| f.len() == 2));
        assert!(matches!(
            stratified_kfold(&classes(4, 10), 5, 1),
            Err(Error::TooFewPerClass { class: "unmaintained", count: 4, k: 5 })
        ));
        assert!(stratified_kfold(&classes(4, 4), 1, 1).is_err());
    }

    #[test]
    fn hand_built_confusion() {
        let cc = ConfusionCounts { tp: 8, fp: 2, fn_: 2, tn: 8 };
        let scores: Vec<(f64, Class)> = (0..10)
            .map(|i| (0.5 + i as f64 / 20.0, Class::Unmaintained))
            .chain((0..10).map(|i| (i as f64 / 20.0 + 0.05, Class::Active)))
            .collect();
        let m = compute_metrics(&cc, &scores).unwrap();
        assert!((m.kappa.unwrap() - 0.6).abs() < 1e-15);
        assert_eq!(m.accuracy, Some(0.8));
        assert_eq!(m.precision, Some(0.8));
        let mut wins = 0.0;
        for p in scores.iter().filter(|s| s.1 == Class::Unmaintained) {
            for n in scores.iter().filter(|s| s.1 == Class::Active) {
                wins += if p.0 > n.0 { 1.0 } else if p.0 == n.0 { 0.5 } else { 0.0 };
            }
        }
        assert_eq!(m.auc, Some(wins / 100.0));
    }

    #[test]
    fn perfect_and_constant() {
        let truth = classes(3, 7);
        let perfect: Vec<(Class, f64)> = truth.iter().map(|&c| (c, if c == Class::Unmaintained { 0.9 } else { 0.1 })).collect();
        let m = metrics_for(&truth, &perfect).unwrap();
        assert!(m.values().iter().all(|v| *v == Some(1.0)));

        let all = baseline_metrics(&truth, Baseline::AllUnmaintained, 0).unwrap();
        assert_eq!(all.recall, Some(1.0));
        assert_eq!(all.precision, Some(3.0 / 10.0));
        assert_eq!(all.kappa, Some(0.0));
        assert_eq!(all.auc, Some(0.5));

        let never: Vec<(Class, f64)> = vec![(Class::Active, 0.0); 10];
        let m = metrics_for(&truth, &never).unwrap();
        assert_eq!(m.precision, None);
        assert_eq!(m.f_measure, None);
        assert_eq!(m.recall, Some(0.0));
        assert_eq!(m.kappa, Some(0.0));
        assert!(baseline_metrics(&[], Baseline::Random, 0).is_err());
    }

    #[test]
    fn random_baseline_is_near_chance() {
        let truth = classes(500, 500);
        let mean: f64 = (0..100)
            .map(|s| baseline_metrics(&truth, Baseline::Random, s).unwrap().accuracy.unwrap())
            .sum::<f64>()
            / 100.0;
        assert!((mean - 0.5).abs() <= 0.05, "{mean}");
    }

    #[test]
    fn csv_layout() {
        let m = Metrics {
            precision: Some(0.5),
            recall: None,
            f_measure: None,
            accuracy: Some(1.0 / 3.0),
            auc: Some(1.0),
            kappa: Some(0.0),
        };
        let r = ExperimentResult {
            scenario: Scenario::new(24, 3).unwrap(),
            rounds: vec![m, m],
            mean: Metrics::mean(&[m, m]),
        };
        let mut out = Vec::new();
        r.write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(
            text.lines().collect::<Vec<_>>(),
            [
                "round,precision,recall,f_measure,accuracy,auc,kappa",
                "1,0.500000,undefined,undefined,0.333333,1.000000,0.000000",
                "2,0.500000,undefined,undefined,0.333333,1.000000,0.000000",
                "mean,0.500000,undefined,undefined,0.333333,1.000000,0.000000",
            ]
        );
    }

    fn toy_dataset(n: usize) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let labels: Vec<Option<Class>> = (0..n)
            .map(|i| Some(if i % 4 == 0 { Class::Unmaintained } else { Class::Active }))
            .collect();
        let rows = labels
            .iter()
            .map(|l| {
                let base = if *l == Some(Class::Active) { 10.0 } else { 0.0 };
                vec![base + rng.random_range(0.0..3.0), rng.random(), base * 2.0 + rng.random::<f64>()]
            })
            .collect();
        Dataset {
            columns: vec!["a".into(), "b".into(), "c".into()],
            repo_ids: (0..n).map(|i| format!("o/r{i}")).collect(),
            rows,
            labels,
        }
    }

    #[test]
    fn experiment_is_deterministic_and_learns() {
        let ds = toy_dataset(80);
        let cfg = ExperimentConfig {
            rounds: 2,
            seed: 7,
            forest: ForestConfig { n_trees: 15, ..ForestConfig::default() },
            ..ExperimentConfig::default()
        };
        let sc = Scenario::new(24, 3).unwrap();
        let a = run_experiment_on(&ds, sc, &cfg).unwrap();
        let b = run_experiment_on(&ds, sc, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.rounds.len(), 2);
        assert!(a.mean.f_measure.unwrap() >= 0.9);

        let mut single = ds.clone();
        single.labels = vec![Some(Class::Active); single.len()];
        assert!(matches!(run_experiment_on(&single, sc, &cfg), Err(Error::SingleClass)));
    }

    proptest! {
        #[test]
        fn auc_matches_pair_count(raw in prop::collection::vec((0u8..20, proptest::bool::ANY), 2..120)) {
            let scores: Vec<(f64, Class)> = raw
                .iter()
                .map(|&(s, u)| (s as f64 / 7.0, if u { Class::Unmaintained } else { Class::Active }))
                .collect();
            let pos: Vec<f64> = scores.iter().filter(|s| s.1 == Class::Unmaintained).map(|s| s.0).collect();
            let neg: Vec<f64> = scores.iter().filter(|s| s.1 == Class::Active).map(|s| s.0).collect();
            match auc(&scores) {
                None => prop_assert!(pos.is_empty() || neg.is_empty()),
                Some(a) => {
                    let mut wins = 0.0;
                    for p in &pos {
                        for n in &neg {
                            wins += if p > n { 1.0 } else if p == n { 0.5 } else { 0.0 };
                        }
                    }
                    prop_assert!((a - wins / (pos.len() * neg.len()) as f64).abs() < 1e-12);
                }
            }
        }

        #[test]
        fn folds_partition(u in 5usize..40, a in 5usize..80, k in 2usize..6, seed in 0u64..1000) {
            let labels = classes(u, a);
            let folds = stratified_kfold(&labels, k, seed).unwrap();
            let mut all: Vec<usize> = folds.concat();
            all.sort_unstable();
            prop_assert_eq!(all, (0..u + a).collect::<Vec<_>>());
            for f in &folds {
                let fu = f.iter().filter(|&&i| labels[i] == Class::Unmaintained).count() as f64;
                prop_assert!((fu - u as f64 / k as f64).abs() <= 1.0);
                prop_assert!((f.len() as f64 - (u + a) as f64 / k as f64).abs() <= 1.0);
            }
        }

        #[test]
        fn constant_classifier_kappa_is_zero(u in 0u64..50, a in 0u64..50) {
            let all_u = ConfusionCounts { tp: u, fp: a, fn_: 0, tn: 0 };
            let all_a = ConfusionCounts { tp: 0, fp: 0, fn_: u, tn: a };
            for cc in [all_u, all_a] {
                if let Some(k) = cc.kappa() {
                    prop_assert_eq!(k, 0.0);
                }
            }
        }
    }
}
