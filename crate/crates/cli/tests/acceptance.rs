//! Acceptance run: twelve criteria, one PASS/FAIL line each.
//!
//! `cargo test -p repo-vitals --test acceptance` (add `--release` for timings
//! closer to production). Exits non-zero if any criterion fails.

mod common;
#[path = "../../core/tests/support/mod.rs"]
mod support;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use repo_vitals::evaluate::{
    auc, baseline_metrics, run_experiment_on, Baseline, ConfusionCounts, ExperimentConfig,
};
use repo_vitals::features::{extract_features, Feature};
use repo_vitals::forest::{mda_importance, train_forest, train_on, ForestConfig};
use repo_vitals::lma::{level_of, Color, LmaStatus, LmaValue, Quartiles};
use repo_vitals::prune::prune;
use repo_vitals::stats::{cliffs_delta, mann_whitney_u, Alternative, Magnitude};
use repo_vitals::survival::{kaplan_meier, LifetimeSample};
use repo_vitals::synth::{generate_corpus, GeneratorConfig};
use repo_vitals::{AnchorPolicy, Class, Dataset, Scenario};
use repo_vitals_cli::schema::{badge_schema, validate};
use repo_vitals_cli::service::badge_for;
use repo_vitals_cli::{run, Cli, ModelBundle};
use support::*;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(budget: Duration, took: Duration, what: &str) -> Result<(), String> {
    ensure(took < budget, || format!("{what} took {took:.2?}, budget {budget:.0?}"))
}

fn scenario_arithmetic() -> Check {
    let expected = [26, 13, 52, 26, 13, 78, 39, 104, 52, 26];
    let corpus = generate_corpus(&GeneratorConfig {
        n_repos: 4,
        seed: 1,
        ..GeneratorConfig::default()
    })
    .map_err(|e| e.to_string())?;
    let start = Instant::now();
    for (scenario, want) in Scenario::ALL.iter().zip(expected) {
        for e in &corpus.entries {
            let fm = extract_features(&e.snapshot, *scenario, None).map_err(|e| e.to_string())?;
            let got = fm.flatten().len();
            ensure(got == want, || format!("scenario {scenario}: {got} data points, want {want}"))?;
        }
    }
    let took = start.elapsed();
    within(Duration::from_secs(1), took, "extraction")?;
    Ok(format!("10 scenarios x 4 repos in {took:.2?}"))
}

fn planted_signal() -> Check {
    let start = Instant::now();
    let gen = GeneratorConfig {
        seed: 7,
        ..GeneratorConfig::default()
    };
    let corpus = generate_corpus(&gen).map_err(|e| e.to_string())?;
    let scenario = Scenario::new(24, 3).unwrap();
    let ds = Dataset::from_corpus(&corpus, scenario, AnchorPolicy::ObservedAt)
        .map_err(|e| e.to_string())?
        .labeled();
    let cfg = ExperimentConfig {
        rounds: 10,
        seed: 1,
        anchor: AnchorPolicy::ObservedAt,
        ..ExperimentConfig::default()
    };
    let result = run_experiment_on(&ds, scenario, &cfg).map_err(|e| e.to_string())?;
    let truth = ds.classes().map_err(|e| e.to_string())?;
    let base = baseline_metrics(&truth, Baseline::AllUnmaintained, 0).map_err(|e| e.to_string())?;
    let took = start.elapsed();

    let f = result.mean.f_measure.unwrap_or(f64::NAN);
    let kappa = result.mean.kappa.unwrap_or(f64::NAN);
    let prevalence = gen.n_unmaintained() as f64 / gen.n_repos as f64;
    ensure(f >= 0.90, || format!("mean F {f:.4} < 0.90"))?;
    ensure(kappa >= 0.75, || format!("mean kappa {kappa:.4} < 0.75"))?;
    ensure(base.recall == Some(1.0), || format!("baseline recall {:?}", base.recall))?;
    ensure(base.precision == Some(prevalence), || {
        format!("baseline precision {:?} != {prevalence}", base.precision)
    })?;
    within(Duration::from_secs(60), took, "experiment")?;
    Ok(format!(
        "F {f:.4}, kappa {kappa:.4}, baseline P {prevalence} R 1.0, {took:.2?}"
    ))
}

fn random_dataset(rng: &mut ChaCha8Rng, n: usize, p: usize) -> (Vec<Vec<f64>>, Vec<Class>) {
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..p).map(|_| rng.random_range(0..12) as f64).collect())
        .collect();
    let labels = rows
        .iter()
        .map(|r| {
            if r[0] + r[1] + rng.random_range(0.0..8.0) > 14.0 {
                Class::Active
            } else {
                Class::Unmaintained
            }
        })
        .collect();
    (rows, labels)
}

fn cart_equivalence() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut compared = 0;
    for set in 0..20 {
        let (rows, labels) = random_dataset(&mut rng, 100, 5);
        let names: Vec<String> = (0..5).map(|i| format!("x{i}")).collect();
        let cfg = ForestConfig {
            n_trees: 1,
            mtry: Some(5),
            bootstrap: false,
            ..ForestConfig::default()
        };
        let forest = train_forest(&names, &rows, &labels, &cfg).map_err(|e| e.to_string())?;
        let oracle = Cart::fit(&rows, &labels);
        let probes: Vec<Vec<f64>> = (0..100)
            .map(|_| (0..5).map(|_| rng.random_range(-1..14) as f64).collect())
            .collect();
        for row in rows.iter().chain(&probes) {
            let got = forest.predict_proba(row).map_err(|e| e.to_string())?.label;
            ensure(got == oracle.predict(row), || format!("dataset {set}: disagreement at {row:?}"))?;
            compared += 1;
        }
    }
    Ok(format!("{compared} predictions identical over 20 datasets"))
}

fn auc_identity() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let mut worst: f64 = 0.0;
    for set in 0..50 {
        let n = rng.random_range(2..=500);
        let mut scores: Vec<(f64, Class)> = (0..n)
            .map(|_| {
                let c = if rng.random_bool(0.35) { Class::Unmaintained } else { Class::Active };
                (rng.random_range(0..50) as f64 / 50.0, c)
            })
            .collect();
        scores[0].1 = Class::Unmaintained;
        scores[1].1 = Class::Active;
        let pos: Vec<f64> = scores.iter().filter(|s| s.1 == Class::Unmaintained).map(|s| s.0).collect();
        let neg: Vec<f64> = scores.iter().filter(|s| s.1 == Class::Active).map(|s| s.0).collect();
        let a = auc(&scores).ok_or("auc undefined")?;
        let u = mann_whitney_u(&pos, &neg, Alternative::TwoSided)
            .map_err(|e| e.to_string())?
            .statistic;
        let d_pairs = (a - brute_auc(&pos, &neg)).abs();
        let d_u = (a - u / (pos.len() * neg.len()) as f64).abs();
        worst = worst.max(d_pairs).max(d_u);
        ensure(d_pairs <= 1e-12 && d_u <= 1e-12, || {
            format!("set {set}: |auc - pairs| {d_pairs:e}, |auc - U/nm| {d_u:e}")
        })?;
    }
    Ok(format!("50 sets, max deviation {worst:e}"))
}

fn kappa_checks() -> Check {
    let perfect = ConfusionCounts {
        tp: 37,
        fp: 0,
        fn_: 0,
        tn: 63,
    }
    .kappa();
    ensure(perfect == Some(1.0), || format!("perfect classifier kappa {perfect:?}"))?;
    let constant = ConfusionCounts {
        tp: 37,
        fp: 63,
        fn_: 0,
        tn: 0,
    }
    .kappa();
    ensure(constant == Some(0.0), || format!("constant classifier kappa {constant:?}"))?;

    let mut rng = ChaCha8Rng::seed_from_u64(51);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let cc = ConfusionCounts {
            tp: rng.random_range(1..300),
            fp: rng.random_range(1..300),
            fn_: rng.random_range(1..300),
            tn: rng.random_range(1..300),
        };
        let k = cc.kappa().ok_or("kappa undefined")?;
        let dev = (k - marginal_kappa(cc.tp, cc.fp, cc.fn_, cc.tn)).abs();
        worst = worst.max(dev);
        ensure(dev <= 1e-12, || format!("{cc:?}: deviation {dev:e}"))?;
    }
    Ok(format!("perfect 1.0, constant 0.0, 20 matrices max deviation {worst:e}"))
}

fn kaplan_meier_checks() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(61);
    for n in [1, 2, 17, 100, 500, 1000] {
        let d: Vec<f64> = (0..n).map(|_| rng.random_range(1..200) as f64 / 4.0).collect();
        let samples: Vec<LifetimeSample> = d
            .iter()
            .enumerate()
            .map(|(i, &x)| LifetimeSample::new(format!("r/{i}"), x, true))
            .collect();
        let curve = kaplan_meier(&samples).map_err(|e| e.to_string())?;
        for s in &curve.steps {
            ensure(s.exact == empirical_survival(&d, s.t), || {
                format!("n={n}: S({}) = {} but empirical {}", s.t, s.exact, empirical_survival(&d, s.t))
            })?;
        }
    }
    let fixture = [
        LifetimeSample::new("a", 1.0, true),
        LifetimeSample::new("b", 2.0, false),
        LifetimeSample::new("c", 3.0, true),
    ];
    let curve = kaplan_meier(&fixture).map_err(|e| e.to_string())?;
    let s1 = curve.exact_at(1.0).clone();
    let s3 = curve.exact_at(3.0).clone();
    ensure(s1 == rational(2, 3), || format!("S(1) = {s1}"))?;
    ensure(s3.is_zero(), || format!("S(3) = {s3}"))?;
    Ok("empirical match for n up to 1000; {1, 2+, 3} gives S(1)=2/3, S(3)=0".into())
}

fn lma_checks() -> Check {
    for (p, want) in [(0.5, 0.0), (0.75, 50.0), (1.0, 100.0)] {
        let v = LmaValue::from_p_active(p).map_err(|e| e.to_string())?.value;
        ensure(v == want, || format!("LMA({p}) = {v}, want {want}"))?;
    }
    for p in [0.0, 0.25, 0.4999] {
        ensure(LmaValue::from_p_active(p).is_err(), || format!("LMA({p}) accepted"))?;
    }
    let q = Quartiles::new(48.0, 82.0, 97.0).unwrap();
    let probes = [
        (10.0, Color::Orange),
        (48.0, Color::Orange),
        (70.0, Color::Yellow),
        (97.0, Color::Yellow),
        (99.0, Color::Green),
    ];
    for (value, want) in probes {
        let status = LmaStatus::Active(LmaValue {
            value,
            p_active: LmaValue::p_from_value(value),
        });
        let got = level_of(&status, &q).color();
        ensure(got == want, || format!("LMA {value}: {got:?}, want {want:?}"))?;
    }
    Ok("affine map exact, p < 0.5 rejected, 5 probes banded".into())
}

fn effect_size_checks() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(71);
    let mut worst: f64 = 0.0;
    for _ in 0..40 {
        let a: Vec<f64> = (0..rng.random_range(1..=200)).map(|_| rng.random_range(0..40) as f64).collect();
        let b: Vec<f64> = (0..rng.random_range(1..=200)).map(|_| rng.random_range(0..40) as f64).collect();
        let d = cliffs_delta(&a, &b).map_err(|e| e.to_string())?.d;
        let dev = (d - brute_delta(&a, &b)).abs();
        worst = worst.max(dev);
        ensure(dev <= 1e-12, || format!("delta deviation {dev:e}"))?;
    }
    for _ in 0..40 {
        let (n, m) = (rng.random_range(1..=200usize), rng.random_range(1..=200usize));
        let a: Vec<f64> = (0..n).map(|_| f64::from(u8::from(rng.random_bool(0.6)))).collect();
        let b: Vec<f64> = (0..m).map(|_| f64::from(u8::from(rng.random_bool(0.4)))).collect();
        let (ya, yb) = (a.iter().sum::<f64>() as i64, b.iter().sum::<f64>() as i64);
        let d = cliffs_delta(&a, &b).map_err(|e| e.to_string())?.d;
        // d·n·m is the integer ya·m − yb·n.
        let scaled = d * (n * m) as f64;
        let exact = ya * m as i64 - yb * n as i64;
        ensure((scaled - exact as f64).abs() < 1e-6, || {
            format!("binary identity: d·nm = {scaled}, want {exact}")
        })?;
        let shares = ya as f64 / n as f64 - yb as f64 / m as f64;
        ensure((d - shares).abs() <= 1e-12, || format!("binary identity: d {d} vs {shares}"))?;
    }
    let a: Vec<f64> = (0..100).map(|i| f64::from(u8::from(i < 71))).collect();
    let b: Vec<f64> = (0..100).map(|i| f64::from(u8::from(i < 45))).collect();
    let e = cliffs_delta(&a, &b).map_err(|e| e.to_string())?;
    ensure((e.d - 0.26).abs() < 1e-12 && e.magnitude == Magnitude::Small, || {
        format!("(0.71, 0.45) gives d {} {:?}", e.d, e.magnitude)
    })?;
    Ok(format!("brute max deviation {worst:e}; binary identity exact; anchor d=0.26 small"))
}

fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        for &k in &idx[i..=j] {
            ranks[k] = (i + j) as f64 / 2.0 + 1.0;
        }
        i = j + 1;
    }
    ranks
}

fn oracle_rho(x: &[f64], y: &[f64]) -> f64 {
    let (rx, ry) = (average_ranks(x), average_ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

fn pruning_checks() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(81);
    let mut clusters_checked = 0;
    for set in 0..50 {
        let n = rng.random_range(200..=400);
        let base = rng.random_range(4..=8);
        let mut cols: Vec<Vec<f64>> = (0..base)
            .map(|_| (0..n).map(|_| rng.random_range(0.0..1.0)).collect())
            .collect();
        let mut names: Vec<String> = (0..base).map(|i| format!("base{i}")).collect();
        let mut duplicated = Vec::new();
        for d in 0..rng.random_range(1..=3) {
            let src = rng.random_range(0..base);
            cols.push(cols[src].clone());
            names.push(format!("dup{d}_of_base{src}"));
            duplicated.push((src, cols.len() - 1));
        }
        let p = cols.len();
        let rows: Vec<Vec<f64>> = (0..n).map(|r| cols.iter().map(|c| c[r]).collect()).collect();
        let report = prune(&names, &rows, 0.7).map_err(|e| e.to_string())?;

        for cluster in &report.clusters {
            for (i, &a) in cluster.iter().enumerate() {
                for &b in &cluster[i + 1..] {
                    let rho = oracle_rho(&cols[a], &cols[b]).abs();
                    ensure(rho >= 0.7, || {
                        format!("set {set}: {} and {} clustered at |rho| {rho:.3}", names[a], names[b])
                    })?;
                }
            }
            clusters_checked += 1;
        }
        for &(src, dup) in &duplicated {
            let both = report.kept.contains(&names[src]) && report.kept.contains(&names[dup]);
            ensure(!both, || format!("set {set}: exact duplicate {} kept", names[dup]))?;
        }
        for i in 0..base {
            let independent = (0..p)
                .filter(|&j| j != i)
                .all(|j| oracle_rho(&cols[i], &cols[j]).abs() < 0.5);
            if independent {
                ensure(report.kept.contains(&names[i]), || format!("set {set}: {} pruned", names[i]))?;
            }
        }
    }
    Ok(format!("50 datasets, {clusters_checked} clusters verified"))
}

fn mda_checks() -> Check {
    let corpus = generate_corpus(&GeneratorConfig {
        seed: 7,
        ..GeneratorConfig::default()
    })
    .map_err(|e| e.to_string())?;
    let scenario = Scenario::new(24, 3).unwrap();
    let full = Dataset::from_corpus(&corpus, scenario, AnchorPolicy::ObservedAt)
        .map_err(|e| e.to_string())?
        .labeled();
    let signal = format!("{}_T22_24", Feature::Commits.name());
    let base = full.select_columns(std::slice::from_ref(&signal)).map_err(|e| e.to_string())?;
    let labels = base.classes().map_err(|e| e.to_string())?;
    const NOISE: usize = 4;
    let names: Vec<String> = std::iter::once(signal.clone())
        .chain((0..NOISE).map(|i| format!("noise{i}")))
        .collect();

    let mut wins = 0;
    let mut noise_sum = 0.0;
    for run in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + run);
        let rows: Vec<Vec<f64>> = base
            .rows
            .iter()
            .map(|r| {
                let mut row = r.clone();
                row.extend((0..NOISE).map(|_| rng.random_range(0.0..1.0)));
                row
            })
            .collect();
        let cfg = ForestConfig::default().with_seed(run);
        let forest = train_forest(&names, &rows, &labels, &cfg).map_err(|e| e.to_string())?;
        let report = mda_importance(&forest, &rows, &labels, run).map_err(|e| e.to_string())?;
        let s = report.get(&signal).unwrap();
        let noise: Vec<f64> = (0..NOISE).map(|i| report.get(&format!("noise{i}")).unwrap()).collect();
        if noise.iter().all(|&x| s > x) {
            wins += 1;
        }
        noise_sum += noise.iter().sum::<f64>();
    }
    let noise_mean = noise_sum / (100 * NOISE) as f64;
    ensure(wins >= 95, || format!("signal beat all noise in {wins}/100 runs"))?;
    ensure(noise_mean.abs() <= 1.0, || format!("noise MDA mean {noise_mean:.3}"))?;
    Ok(format!("signal ahead in {wins}/100 runs, noise mean {noise_mean:+.3} points"))
}

const PIPELINE_FILES: [&str; 7] = [
    "snapshots/manifest.csv",
    "features.csv",
    "prune.csv",
    "model.json",
    "importance.csv",
    "evaluation.csv",
    "baselines.csv",
];

fn pipeline_once(dir: &std::path::Path) -> Result<Vec<Vec<u8>>, String> {
    let cache = dir.to_str().unwrap();
    let steps: [&[&str]; 5] = [
        &["synth", "--repos", "200", "--seed", "5"],
        &["extract", "--scenario", "24,3", "--anchor", "observed"],
        &["prune"],
        &["train", "--scenario", "24,3", "--anchor", "observed", "--seed", "5"],
        &["evaluate", "--scenario", "24,3", "--anchor", "observed", "--seed", "5", "--rounds", "3"],
    ];
    for step in steps {
        let mut argv = vec!["repo-vitals", "--cache", cache];
        argv.extend_from_slice(step);
        let cli = <Cli as clap::Parser>::try_parse_from(&argv).map_err(|e| e.to_string())?;
        run(cli, &mut std::io::sink()).map_err(|e| format!("{step:?}: {e}"))?;
    }
    PIPELINE_FILES
        .iter()
        .map(|f| std::fs::read(dir.join(f)).map_err(|e| format!("{f}: {e}")))
        .collect()
}

fn determinism() -> Check {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let first = pipeline_once(a.path())?;
    let second = pipeline_once(b.path())?;
    for (name, (x, y)) in PIPELINE_FILES.iter().zip(first.iter().zip(&second)) {
        ensure(!x.is_empty() && x == y, || format!("{name} differs between runs"))?;
    }
    let bytes: usize = first.iter().map(Vec::len).sum();
    Ok(format!("{} artifacts byte-identical ({bytes} bytes)", PIPELINE_FILES.len()))
}

fn service_contract() -> Check {
    let schema = badge_schema();
    let now = repo_vitals::Timestamp::ymd(2024, 1, 1);
    for level in common::GOLDEN_LEVELS {
        let (active, repo) = common::golden_case(level);
        let model = common::bundle(active);
        let snapshot = if repo == "old" { common::old_repo() } else { common::young_repo() };
        let payload = badge_for(&snapshot, &model, now).map_err(|e| e.to_string())?;
        let value = serde_json::to_value(&payload).unwrap();
        let errors = validate(&schema, &value);
        ensure(errors.is_empty(), || format!("{level}: schema violations {errors:?}"))?;
        ensure(value == common::golden(level, &model.model_version), || {
            format!("{level}: payload differs from golden file: {value}")
        })?;
        ensure(value.get("lma").is_some() == (value["label"] == "active"), || {
            format!("{level}: lma presence does not match label")
        })?;
    }

    let train = generate_corpus(&GeneratorConfig {
        n_repos: 100,
        seed: 12,
        ..GeneratorConfig::default()
    })
    .map_err(|e| e.to_string())?;
    let probe = generate_corpus(&GeneratorConfig {
        n_repos: 100,
        seed: 13,
        ..GeneratorConfig::default()
    })
    .map_err(|e| e.to_string())?;
    let scenario = Scenario::new(24, 3).unwrap();
    let ds = Dataset::from_corpus(&train, scenario, AnchorPolicy::LastCommit).map_err(|e| e.to_string())?;
    let forest = train_on(&ds, &ForestConfig::default().with_seed(3)).map_err(|e| e.to_string())?;
    let bundle = ModelBundle::new(forest, scenario, AnchorPolicy::LastCommit, Quartiles::new(48.0, 82.0, 97.0).unwrap());
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    bundle.save(&path).map_err(|e| e.to_string())?;
    let loaded = ModelBundle::load(&path).map_err(|e| e.to_string())?;
    let probe_ds = Dataset::from_corpus(&probe, scenario, AnchorPolicy::LastCommit).map_err(|e| e.to_string())?;
    let before = bundle.forest.predict_dataset(&probe_ds).map_err(|e| e.to_string())?;
    let after = loaded.forest.predict_dataset(&probe_ds).map_err(|e| e.to_string())?;
    ensure(before.len() == 100 && before == after, || "predictions changed after reload".into())?;
    for s in probe.entries.iter().map(|e| &e.snapshot) {
        let x = badge_for(s, &bundle, now).map_err(|e| e.to_string())?;
        let y = badge_for(s, &loaded, now).map_err(|e| e.to_string())?;
        ensure(x == y, || format!("{}: badge changed after reload", s.repo_id()))?;
    }
    Ok("5 golden levels schema-valid; 100 probe predictions survive reload".into())
}

fn main() {
    let criteria: [(u8, &str, fn() -> Check); 12] = [
        (1, "scenario arithmetic", scenario_arithmetic),
        (2, "planted-signal classification", planted_signal),
        (3, "single tree equals plain CART", cart_equivalence),
        (4, "AUC oracle and U identity", auc_identity),
        (5, "kappa", kappa_checks),
        (6, "Kaplan-Meier", kaplan_meier_checks),
        (7, "LMA map and levels", lma_checks),
        (8, "effect sizes", effect_size_checks),
        (9, "correlation pruning", pruning_checks),
        (10, "MDA importance", mda_checks),
        (11, "pipeline determinism", determinism),
        (12, "service contract", service_contract),
    ];
    let mut failed = 0;
    for (id, name, check) in criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let took = start.elapsed();
        match outcome {
            Ok(detail) => println!("PASS {id:>2} {name}: {detail} [{took:.2?}]"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {id:>2} {name}: {detail} [{took:.2?}]");
            }
        }
    }
    println!("{} of 12 criteria passed", 12 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
