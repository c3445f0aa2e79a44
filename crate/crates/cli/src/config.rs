//! Defaults read from `config.toml`, overridden by command-line flags.

use std::path::Path;

use repo_vitals::AnchorPolicy;
use serde::Deserialize;

use crate::error::{CliError, Result};

pub const CONFIG_FILE: &str = "config.toml";

/// Every key is optional; absent keys fall back to built-in defaults.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub scenario: Option<String>,
    pub seed: Option<u64>,
    pub rounds: Option<usize>,
    pub folds: Option<usize>,
    pub trees: Option<usize>,
    pub anchor: Option<String>,
    pub threshold: Option<f64>,
    pub port: Option<u16>,
    pub points: Option<usize>,
    pub concurrency: Option<usize>,
}

impl Config {
    pub fn parse(text: &str, origin: &str) -> Result<Config> {
        toml::from_str(text).map_err(|e| CliError::Config(format!("{origin}: {e}")))
    }

    /// Missing file means all defaults.
    pub fn load(path: &Path) -> Result<Config> {
        match std::fs::read_to_string(path) {
            Ok(text) => Config::parse(&text, &path.display().to_string()),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(Config::default()),
            Err(e) => Err(CliError::io(path, e)),
        }
    }

    pub fn anchor(&self) -> Result<Option<AnchorPolicy>> {
        self.anchor
            .as_deref()
            .map(|a| a.parse().map_err(|e: repo_vitals::Error| CliError::Config(e.to_string())))
            .transpose()
    }
}
