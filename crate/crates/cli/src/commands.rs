//! Subcommand implementations. Reports go to the cache and to `out`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use repo_vitals::evaluate::{baseline_metrics, run_experiment_on, write_baselines_csv, Baseline, ExperimentConfig};
use repo_vitals::features::extract_features;
use repo_vitals::forest::{mda_importance, train_on, ForestConfig};
use repo_vitals::lma::{evaluation_dates, population_levels, series_from_snapshot, Level, QuartileMode};
use repo_vitals::practices::{compare_adoption, detect_practices, scan_readme, write_adoption_csv, Practice};
use repo_vitals::prune::{prune, DEFAULT_THRESHOLD};
use repo_vitals::seed::derive_seed;
use repo_vitals::snapshot::{
    load_corpus, load_snapshot, save_manifest, save_snapshot, snapshot_file_name, HISTORY_DIR, MANIFEST_FILE,
    SNAPSHOT_SUFFIX,
};
use repo_vitals::survival::{grouped_curves, kaplan_meier_with, lifetime, write_curves_csv, GroupKey, KmOptions};
use repo_vitals::synth::{generate_corpus, GeneratorConfig, NoiseLevel};
use repo_vitals::{AnchorPolicy, Class, Corpus, CorpusEntry, Dataset, Label, RepoSnapshot, Scenario, Timestamp};
use repo_vitals_github::{ClientConfig, GithubClient};
use serde::Serialize;

use crate::args::{Cli, Command, ModelArgs, WindowArgs};
use crate::bundle::{oob_quartiles, ModelBundle};
use crate::config::{Config, CONFIG_FILE};
use crate::error::{CliError, Result};
use crate::service::{self, AppState, CacheSource, FetchingSource, SnapshotSource};

pub const DEFAULT_SCENARIO: Scenario = Scenario {
    length_months: 24,
    interval_months: 3,
};
pub const DEFAULT_PORT: u16 = 8080;
pub const DEFAULT_POINTS: usize = 8;

/// Locations of everything the CLI reads and writes.
#[derive(Debug, Clone)]
pub struct Cache {
    pub root: PathBuf,
}

impl Cache {
    pub fn new(root: impl Into<PathBuf>) -> Cache {
        Cache { root: root.into() }
    }

    pub fn snapshots(&self) -> PathBuf {
        self.root.join("snapshots")
    }

    pub fn manifest(&self) -> PathBuf {
        self.snapshots().join(MANIFEST_FILE)
    }

    pub fn file(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn model(&self) -> PathBuf {
        self.file("model.json")
    }

    fn ensure(&self) -> Result<()> {
        fs::create_dir_all(&self.root).map_err(|e| CliError::io(&self.root, e))
    }
}

struct Ctx<'a> {
    cache: Cache,
    config: Config,
    out: &'a mut dyn Write,
}

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<()> {
    let cache = Cache::new(&cli.cache);
    let config_path = cli.config.clone().unwrap_or_else(|| cache.file(CONFIG_FILE));
    let config = Config::load(&config_path)?;
    let mut ctx = Ctx { cache, config, out };
    match cli.command {
        Command::Ingest {
            repos,
            label,
            concurrency,
            api_url,
            attempts,
        } => ctx.ingest(&repos, label.as_deref(), concurrency, client_for(api_url, attempts)?),
        Command::Synth {
            repos,
            unmaintained,
            noise,
            months,
            seed,
            force,
        } => ctx.synth(repos, unmaintained, &noise, months, seed, force),
        Command::Extract { window } => ctx.extract(&window),
        Command::Prune { threshold } => ctx.prune(threshold),
        Command::Train { window, model } => ctx.train(&window, &model),
        Command::Evaluate {
            window,
            model,
            rounds,
            folds,
        } => ctx.evaluate(&window, &model, rounds, folds),
        Command::Predict { repo } => ctx.predict(&repo),
        Command::Lma { repo } => ctx.lma(&repo),
        Command::History {
            repo,
            points,
            frozen_quartiles,
        } => ctx.history(&repo, points, frozen_quartiles),
        Command::Survival {
            group_by,
            left_truncate,
        } => ctx.survival(&group_by, left_truncate),
        Command::Practices { compare } => ctx.practices(compare),
        Command::Serve {
            port,
            bind,
            fetch,
            api_url,
        } => ctx.serve(port, &bind, fetch, api_url),
    }
}

pub fn parse_repo(s: &str) -> Result<(String, String)> {
    match s.split_once('/') {
        Some((o, n)) if !o.is_empty() && !n.is_empty() && !n.contains('/') => Ok((o.to_string(), n.to_string())),
        _ => Err(CliError::Usage(format!("expected `owner/repo`, got {s:?}"))),
    }
}

fn usage<E: std::fmt::Display>(what: &str) -> impl Fn(E) -> CliError + '_ {
    move |e| CliError::Usage(format!("{what}: {e}"))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> repo_vitals::Result<()>) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

fn client_for(api_url: Option<String>, attempts: u32) -> Result<GithubClient> {
    let mut cfg = ClientConfig::from_env();
    cfg.max_attempts = attempts.max(1);
    if let Some(url) = api_url {
        cfg.base_url = url;
    }
    Ok(GithubClient::new(cfg)?)
}

fn runtime() -> Result<tokio::runtime::Runtime> {
    tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| CliError::io("tokio runtime", e))
}

impl Ctx<'_> {
    fn emit(&mut self, bytes: &[u8]) -> Result<()> {
        self.out.write_all(bytes).map_err(|e| CliError::io("stdout", e))
    }

    fn emit_json<T: Serialize>(&mut self, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value).expect("report serializes");
        text.push('\n');
        self.emit(text.as_bytes())
    }

    fn scenario(&self, w: &WindowArgs) -> Result<Scenario> {
        match w.scenario.as_deref().or(self.config.scenario.as_deref()) {
            Some(s) => s.parse().map_err(usage("--scenario")),
            None => Ok(DEFAULT_SCENARIO),
        }
    }

    fn anchor(&self, w: &WindowArgs) -> Result<AnchorPolicy> {
        match &w.anchor {
            Some(a) => a.parse().map_err(usage("--anchor")),
            None => Ok(self.config.anchor()?.unwrap_or_default()),
        }
    }

    fn seed(&self, flag: Option<u64>) -> u64 {
        flag.or(self.config.seed).unwrap_or(0)
    }

    fn threshold(&self, m: &ModelArgs) -> Option<f64> {
        (!m.no_prune).then(|| m.threshold.or(self.config.threshold).unwrap_or(DEFAULT_THRESHOLD))
    }

    fn forest_config(&self, m: &ModelArgs) -> ForestConfig {
        ForestConfig {
            n_trees: m.trees.or(self.config.trees).unwrap_or(100),
            seed: self.seed(m.seed),
            ..ForestConfig::default()
        }
    }

    fn corpus(&self) -> Result<Corpus> {
        let dir = self.cache.snapshots();
        if !dir.is_dir() {
            return Err(repo_vitals::Error::EmptyDataset.into());
        }
        let corpus = load_corpus(&dir)?;
        if corpus.is_empty() {
            return Err(repo_vitals::Error::EmptyDataset.into());
        }
        Ok(corpus)
    }

    fn dataset(&self, scenario: Scenario, anchor: AnchorPolicy) -> Result<Dataset> {
        let (ds, skipped) = Dataset::from_corpus_lenient(&self.corpus()?, scenario, anchor)?;
        for (repo, e) in &skipped {
            tracing::warn!("skipping {repo}: {e}");
        }
        Ok(ds)
    }

    fn snapshot(&self, repo: &str) -> Result<RepoSnapshot> {
        let (owner, name) = parse_repo(repo)?;
        let path = self.cache.snapshots().join(snapshot_file_name(&owner, &name));
        if !path.is_file() {
            return Err(CliError::UnknownRepo(format!("{owner}/{name}")));
        }
        Ok(load_snapshot(&path)?)
    }

    fn ingest(&mut self, repos: &[String], label: Option<&str>, concurrency: Option<usize>, client: GithubClient) -> Result<()> {
        let targets = repos.iter().map(|r| parse_repo(r)).collect::<Result<Vec<_>>>()?;
        let label: Label = label.unwrap_or("unlabeled").parse().map_err(usage("--label"))?;
        let concurrency = concurrency.or(self.config.concurrency).unwrap_or(4);
        let now = Timestamp::now();
        let results = runtime()?.block_on(client.fetch_many(&targets, concurrency, now));
        let dir = self.cache.snapshots();
        fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
        let mut corpus = if self.cache.manifest().is_file() {
            load_corpus(&self.cache.manifest())?
        } else {
            Corpus::default()
        };
        let mut first_error = None;
        for ((owner, name), result) in targets.iter().zip(results) {
            match result {
                Ok(s) => {
                    let path = save_snapshot(&s, &dir)?;
                    writeln!(self.out, "{owner}/{name} -> {}", path.display()).map_err(|e| CliError::io("stdout", e))?;
                    match corpus.entries.iter_mut().find(|e| e.snapshot.repo_id() == s.repo_id()) {
                        Some(e) => {
                            e.snapshot = s;
                            if label != Label::Unlabeled {
                                e.label = label;
                            }
                        }
                        None => corpus.entries.push(CorpusEntry { snapshot: s, label }),
                    }
                }
                Err(e) => {
                    tracing::error!("{owner}/{name}: {e}");
                    first_error.get_or_insert(e);
                }
            }
        }
        save_manifest(&corpus, &self.cache.manifest())?;
        match first_error {
            Some(e) => Err(e.into()),
            None => Ok(()),
        }
    }

    fn synth(&mut self, repos: usize, unmaintained: f64, noise: &str, months: u32, seed: Option<u64>, force: bool) -> Result<()> {
        let noise: NoiseLevel = noise.parse().map_err(usage("--noise"))?;
        let cfg = GeneratorConfig {
            n_repos: repos,
            fraction_unmaintained: unmaintained,
            months_of_history: months,
            noise_level: noise.sigma(),
            seed: self.seed(seed),
            ..GeneratorConfig::default()
        };
        cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        let dir = self.cache.snapshots();
        let existing = existing_snapshots(&dir)?;
        if !existing.is_empty() {
            if !force {
                return Err(CliError::Usage(format!(
                    "{} already holds {} snapshots; pass --force to replace them",
                    dir.display(),
                    existing.len()
                )));
            }
            for p in existing {
                fs::remove_file(&p).map_err(|e| CliError::io(&p, e))?;
            }
            let history = dir.join(HISTORY_DIR);
            if history.is_dir() {
                fs::remove_dir_all(&history).map_err(|e| CliError::io(&history, e))?;
            }
        }
        let corpus = generate_corpus(&cfg)?;
        corpus.save(&dir)?;
        writeln!(
            self.out,
            "generated {} repositories ({} unmaintained) in {}",
            corpus.len(),
            cfg.n_unmaintained(),
            dir.display()
        )
        .map_err(|e| CliError::io("stdout", e))
    }

    fn extract(&mut self, w: &WindowArgs) -> Result<()> {
        let ds = self.dataset(self.scenario(w)?, self.anchor(w)?)?;
        self.cache.ensure()?;
        let bytes = csv_bytes(|b| ds.write_csv(b))?;
        write_file(&self.cache.file("features.csv"), &bytes)?;
        writeln!(self.out, "{} repositories x {} data points", ds.len(), ds.columns.len())
            .map_err(|e| CliError::io("stdout", e))
    }

    fn prune(&mut self, threshold: Option<f64>) -> Result<()> {
        let path = self.cache.file("features.csv");
        let file = fs::File::open(&path).map_err(|e| CliError::io(&path, e))?;
        let ds = Dataset::read_csv(file)?;
        let threshold = threshold.or(self.config.threshold).unwrap_or(DEFAULT_THRESHOLD);
        let report = prune(&ds.columns, &ds.rows, threshold)?;
        let bytes = csv_bytes(|b| report.write_csv(&ds.columns, b))?;
        write_file(&self.cache.file("prune.csv"), &bytes)?;
        self.emit(&bytes)
    }

    fn train(&mut self, w: &WindowArgs, m: &ModelArgs) -> Result<()> {
        let scenario = self.scenario(w)?;
        let anchor = self.anchor(w)?;
        let mut ds = self.dataset(scenario, anchor)?.labeled();
        if let Some(t) = self.threshold(m) {
            let report = prune(&ds.columns, &ds.rows, t)?;
            ds = ds.select_columns(&report.kept)?;
        }
        let cfg = self.forest_config(m);
        let forest = train_on(&ds, &cfg)?;
        let importance = mda_importance(&forest, &ds.rows, &ds.classes()?, derive_seed(cfg.seed, 1))?;
        let quartiles = oob_quartiles(&forest, &ds.rows)?;
        let bundle = ModelBundle::new(forest, scenario, anchor, quartiles);
        self.cache.ensure()?;
        bundle.save(&self.cache.model())?;

        let mut w = csv::Writer::from_writer(Vec::new());
        let csv_err = |e: csv::Error| CliError::Config(format!("importance.csv: {e}"));
        w.write_record(["name", "period", "mda"]).map_err(csv_err)?;
        for e in &importance.entries {
            w.write_record([e.name.as_str(), e.period.as_deref().unwrap_or(""), &format!("{:.6}", e.mda)])
                .map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Config(e.to_string()))?;
        write_file(&self.cache.file("importance.csv"), &bytes)?;
        writeln!(
            self.out,
            "model {} trained on {} repositories, {} data points; quartiles {:.2}/{:.2}/{:.2}",
            bundle.model_version,
            ds.len(),
            ds.columns.len(),
            quartiles.q1,
            quartiles.q2,
            quartiles.q3
        )
        .map_err(|e| CliError::io("stdout", e))
    }

    fn evaluate(&mut self, w: &WindowArgs, m: &ModelArgs, rounds: Option<usize>, folds: Option<usize>) -> Result<()> {
        let scenario = self.scenario(w)?;
        let anchor = self.anchor(w)?;
        let ds = self.dataset(scenario, anchor)?.labeled();
        let cfg = ExperimentConfig {
            folds: folds.or(self.config.folds).unwrap_or(5),
            rounds: rounds.or(self.config.rounds).unwrap_or(100),
            seed: self.seed(m.seed),
            prune_threshold: self.threshold(m),
            anchor,
            forest: self.forest_config(m),
        };
        let result = run_experiment_on(&ds, scenario, &cfg)?;
        let bytes = csv_bytes(|b| result.write_csv(b))?;
        self.cache.ensure()?;
        write_file(&self.cache.file("evaluation.csv"), &bytes)?;

        let truth = ds.classes()?;
        let baselines = Baseline::ALL
            .iter()
            .map(|&b| Ok((b, baseline_metrics(&truth, b, derive_seed(cfg.seed, u64::MAX))?)))
            .collect::<Result<Vec<_>>>()?;
        let baseline_bytes = csv_bytes(|b| write_baselines_csv(&baselines, b))?;
        write_file(&self.cache.file("baselines.csv"), &baseline_bytes)?;
        self.emit(&bytes)
    }

    fn predict(&mut self, repo: &str) -> Result<()> {
        parse_repo(repo)?;
        let bundle = ModelBundle::load(&self.cache.model())?;
        let s = self.snapshot(repo)?;
        let at = bundle.anchor.resolve(&s)?;
        let dp = extract_features(&s, bundle.scenario, Some(at))?.flatten();
        let pred = bundle.forest.predict_named(&dp.names, &dp.values)?;

        #[derive(Serialize)]
        struct Report<'a> {
            repo: String,
            label: Class,
            p_active: f64,
            active_votes: usize,
            n_trees: usize,
            model_version: &'a str,
        }
        self.emit_json(&Report {
            repo: s.repo_id(),
            label: pred.label,
            p_active: pred.p_active,
            active_votes: pred.active_votes,
            n_trees: pred.n_trees,
            model_version: &bundle.model_version,
        })
    }

    fn lma(&mut self, repo: &str) -> Result<()> {
        parse_repo(repo)?;
        let bundle = ModelBundle::load(&self.cache.model())?;
        let s = self.snapshot(repo)?;
        let payload = service::badge_for(&s, &bundle, Timestamp::now())?;
        self.emit_json(&payload)
    }

    fn history(&mut self, repo: &str, points: Option<usize>, frozen: bool) -> Result<()> {
        parse_repo(repo)?;
        let bundle = ModelBundle::load(&self.cache.model())?;
        let target = self.snapshot(repo)?;
        let count = points.or(self.config.points).unwrap_or(DEFAULT_POINTS);
        if count == 0 {
            return Err(CliError::Usage("--points must be at least 1".into()));
        }
        let end = bundle.anchor.resolve(&target)?;
        let dates = evaluation_dates(end, count);
        let series = series_from_snapshot(&target, &dates, &bundle.forest, bundle.scenario)?;
        let levels = if frozen {
            population_levels(std::slice::from_ref(&series), QuartileMode::Frozen(bundle.quartiles))?
        } else {
            // The target's levels at each date are relative to the cached
            // population replayed to the same dates.
            let mut population = vec![series.clone()];
            for e in self.corpus()?.entries {
                if e.snapshot.repo_id() != target.repo_id() {
                    population.push(series_from_snapshot(&e.snapshot, &dates, &bundle.forest, bundle.scenario)?);
                }
            }
            population_levels(&population, QuartileMode::PerDate)?
        };

        let mut w = csv::Writer::from_writer(Vec::new());
        let csv_err = |e: csv::Error| CliError::Config(format!("history: {e}"));
        w.write_record(["date", "status", "lma", "level", "color", "gap"]).map_err(csv_err)?;
        for (d, p) in series.points.iter().enumerate() {
            let level: Level = levels[d][0];
            let status = match p.status {
                repo_vitals::lma::LmaStatus::Active(_) => "active",
                repo_vitals::lma::LmaStatus::Unmaintained => "unmaintained",
                repo_vitals::lma::LmaStatus::NotAnalysed => "not_analysed",
            };
            w.write_record([
                p.date.to_string(),
                status.to_string(),
                p.status.lma().map(|v| format!("{v:.2}")).unwrap_or_default(),
                level.to_string(),
                level.color().to_string(),
                p.gap.clone().unwrap_or_default(),
            ])
            .map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Config(e.to_string()))?;
        self.emit(&bytes)
    }

    fn survival(&mut self, group_by: &str, left_truncate: Option<f64>) -> Result<()> {
        let key: GroupKey = group_by.parse().map_err(usage("--group-by"))?;
        let samples = self
            .corpus()?
            .entries
            .iter()
            .filter(|e| e.label != Label::Unlabeled)
            .map(|e| lifetime(&e.snapshot, e.snapshot.fetched_at, e.label == Label::Unmaintained))
            .collect::<repo_vitals::Result<Vec<_>>>()?;
        let mut grouped = grouped_curves(&samples, key)?;
        if let Some(months) = left_truncate {
            let opts = KmOptions {
                left_truncate_months: Some(months),
            };
            for (group, curve) in grouped.curves.iter_mut() {
                let members: Vec<_> = samples
                    .iter()
                    .filter(|s| group_value(s, key) == Some(group.as_str()))
                    .cloned()
                    .collect();
                *curve = kaplan_meier_with(&members, opts)?;
            }
        }
        let curves: Vec<(&str, &_)> = grouped.curves.iter().map(|(k, v)| (k.as_str(), v)).collect();
        let bytes = csv_bytes(|b| write_curves_csv(&curves, b))?;
        self.cache.ensure()?;
        write_file(&self.cache.file("survival.csv"), &bytes)?;

        let mut w = csv::Writer::from_writer(Vec::new());
        let csv_err = |e: csv::Error| CliError::Config(format!("survival tests: {e}"));
        w.write_record(["a", "b", "u", "p_value", "d", "magnitude"]).map_err(csv_err)?;
        for p in &grouped.pairwise {
            w.write_record([
                p.a.clone(),
                p.b.clone(),
                format!("{:.1}", p.mann_whitney.statistic),
                format!("{:.4}", p.mann_whitney.p_value),
                format!("{:.2}", p.effect.d),
                p.effect.magnitude.as_str().to_string(),
            ])
            .map_err(csv_err)?;
        }
        w.write_record([
            "kruskal_wallis".to_string(),
            String::new(),
            format!("{:.4}", grouped.kruskal_wallis.statistic),
            format!("{:.4}", grouped.kruskal_wallis.p_value),
            String::new(),
            String::new(),
        ])
        .map_err(csv_err)?;
        let tests = w.into_inner().map_err(|e| CliError::Config(e.to_string()))?;
        write_file(&self.cache.file("survival_tests.csv"), &tests)?;
        self.emit(&tests)
    }

    fn practices(&mut self, compare: bool) -> Result<()> {
        let corpus = self.corpus()?;
        self.cache.ensure()?;
        if compare {
            let group = |l: Label| -> Vec<_> {
                corpus
                    .entries
                    .iter()
                    .filter(|e| e.label == l)
                    .map(|e| detect_practices(&e.snapshot))
                    .collect()
            };
            let rows = compare_adoption(&group(Label::Active), &group(Label::Unmaintained))?;
            let bytes = csv_bytes(|b| write_adoption_csv(&rows, b))?;
            write_file(&self.cache.file("adoption.csv"), &bytes)?;
            return self.emit(&bytes);
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        let csv_err = |e: csv::Error| CliError::Config(format!("practices: {e}"));
        let mut header = vec!["repo", "label"];
        header.extend(Practice::ALL.iter().map(|p| p.as_str()));
        header.push("deprecated");
        w.write_record(&header).map_err(csv_err)?;
        for e in &corpus.entries {
            let profile = detect_practices(&e.snapshot);
            let mut record = vec![e.snapshot.repo_id(), e.label.to_string()];
            record.extend(Practice::ALL.iter().map(|&p| u8::from(profile.get(p)).to_string()));
            record.push(u8::from(scan_readme(&e.snapshot.readme_text).matched).to_string());
            w.write_record(&record).map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Config(e.to_string()))?;
        write_file(&self.cache.file("practices.csv"), &bytes)?;
        self.emit(&bytes)
    }

    fn serve(&mut self, port: Option<u16>, bind: &str, fetch: bool, api_url: Option<String>) -> Result<()> {
        let port = port.or(self.config.port).unwrap_or(DEFAULT_PORT);
        let model = match ModelBundle::load(&self.cache.model()) {
            Ok(m) => Some(m),
            Err(CliError::NoModel(p)) => {
                tracing::warn!("{} missing; status requests answer 503 until it appears", p.display());
                None
            }
            Err(e) => return Err(e),
        };
        let dir = self.cache.snapshots();
        let source: Arc<dyn SnapshotSource> = if fetch {
            Arc::new(FetchingSource {
                dir,
                client: client_for(api_url, ClientConfig::default().max_attempts)?,
            })
        } else {
            Arc::new(CacheSource { dir })
        };
        let state = AppState::new(model, source, Arc::new(Timestamp::now));
        let model_path = self.cache.model();
        let addr = format!("{bind}:{port}");
        runtime()?.block_on(async move {
            service::watch_model(state.clone(), model_path, std::time::Duration::from_secs(30));
            let listener = tokio::net::TcpListener::bind(&addr)
                .await
                .map_err(|e| CliError::io(addr.clone(), e))?;
            tracing::info!("listening on {addr}");
            axum::serve(listener, service::router(state))
                .with_graceful_shutdown(async {
                    let _ = tokio::signal::ctrl_c().await;
                })
                .await
                .map_err(|e| CliError::io(addr, e))
        })
    }
}

fn group_value(s: &repo_vitals::survival::LifetimeSample, key: GroupKey) -> Option<&str> {
    match key {
        GroupKey::AccountType => Some(&s.groups.account_type),
        GroupKey::Language => Some(&s.groups.language),
        GroupKey::Domain => s.groups.domain.as_deref(),
    }
}

fn existing_snapshots(dir: &Path) -> Result<Vec<PathBuf>> {
    if !dir.is_dir() {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| CliError::io(dir, e))? {
        let p = entry.map_err(|e| CliError::io(dir, e))?.path();
        if p.file_name()
            .and_then(|n| n.to_str())
            .is_some_and(|n| n.ends_with(SNAPSHOT_SUFFIX) || n == MANIFEST_FILE)
        {
            out.push(p);
        }
    }
    Ok(out)
}
