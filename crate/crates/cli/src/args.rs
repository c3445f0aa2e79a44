use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "repo-vitals", version, about = "Predict whether GitHub projects are still maintained")]
pub struct Cli {
    /// Cache directory holding snapshots, models and reports.
    #[arg(long, global = true, env = "REPO_VITALS_CACHE", default_value = ".repo-vitals")]
    pub cache: PathBuf,

    /// Defaults file; `<cache>/config.toml` when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Print errors as JSON on stderr.
    #[arg(long, global = true)]
    pub json: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Default, Args)]
pub struct WindowArgs {
    /// Window length and interval in months, e.g. `24,3`.
    #[arg(long)]
    pub scenario: Option<String>,
    /// `last-commit`, `observed` or an RFC 3339 instant.
    #[arg(long)]
    pub anchor: Option<String>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct ModelArgs {
    #[arg(long)]
    pub trees: Option<usize>,
    /// Correlation threshold for pruning.
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub no_prune: bool,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fetch repositories from the GitHub API into the cache.
    Ingest {
        /// `owner/repo` names.
        #[arg(required = true)]
        repos: Vec<String>,
        /// Ground-truth label recorded in the manifest.
        #[arg(long)]
        label: Option<String>,
        #[arg(long)]
        concurrency: Option<usize>,
        #[arg(long, env = "REPO_VITALS_API_URL")]
        api_url: Option<String>,
        /// Attempts per request before giving up.
        #[arg(long, default_value_t = 5)]
        attempts: u32,
    },
    /// Generate a labeled synthetic corpus into the cache.
    Synth {
        #[arg(long, default_value_t = 500)]
        repos: usize,
        #[arg(long, default_value_t = 0.25)]
        unmaintained: f64,
        /// none, low, moderate or high.
        #[arg(long, default_value = "moderate")]
        noise: String,
        #[arg(long, default_value_t = 48)]
        months: u32,
        #[arg(long)]
        seed: Option<u64>,
        /// Replace snapshots already in the cache.
        #[arg(long)]
        force: bool,
    },
    /// Write the data-point table for the cached corpus.
    Extract {
        #[command(flatten)]
        window: WindowArgs,
    },
    /// Cluster correlated data points of the extracted table.
    Prune {
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Train the forest and write the model file.
    Train {
        #[command(flatten)]
        window: WindowArgs,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Repeated stratified cross-validation plus baselines.
    Evaluate {
        #[command(flatten)]
        window: WindowArgs,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        rounds: Option<usize>,
        #[arg(long)]
        folds: Option<usize>,
    },
    /// Classify one cached repository.
    Predict { repo: String },
    /// Badge payload (label, LMA, level) for one cached repository.
    Lma { repo: String },
    /// LMA at dates 90 days apart, ending at the repository's anchor.
    History {
        repo: String,
        #[arg(long)]
        points: Option<usize>,
        /// Use the model's quartiles at every date.
        #[arg(long)]
        frozen_quartiles: bool,
    },
    /// Kaplan-Meier curves of project lifetimes by group.
    Survival {
        /// account_type, language or domain.
        #[arg(long)]
        group_by: String,
        /// Ignore projects younger than this many months (24 if no value).
        #[arg(long, num_args = 0..=1, default_missing_value = "24")]
        left_truncate: Option<f64>,
    },
    /// Contribution practices per repository, or adoption compared by label.
    Practices {
        /// Compare active (a) against unmaintained (b) repositories.
        #[arg(long)]
        compare: bool,
    },
    /// Serve badge JSON over HTTP.
    Serve {
        #[arg(long)]
        port: Option<u16>,
        #[arg(long, default_value = "127.0.0.1")]
        bind: String,
        /// Fetch repositories missing from the cache.
        #[arg(long)]
        fetch: bool,
        #[arg(long, env = "REPO_VITALS_API_URL")]
        api_url: Option<String>,
    },
}
