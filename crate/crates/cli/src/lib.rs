//! Command-line front end and HTTP badge service.
//!
//! Every subcommand reads and writes one cache directory: `snapshots/` with
//! its `manifest.csv`, the extracted `features.csv`, `prune.csv`, the trained
//! `model.json` and the evaluation reports. [`service`] serves badge JSON for
//! cached repositories from a trained model.

pub mod args;
pub mod bundle;
pub mod commands;
pub mod config;
pub mod error;
pub mod schema;
pub mod service;

pub use args::Cli;
pub use bundle::ModelBundle;
pub use commands::{run, Cache};
pub use error::{CliError, Result};
pub use service::{BadgeLabel, BadgePayload};
