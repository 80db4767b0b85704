//! Batch experiment runner for `bergman-dpp`.
//!
//! A run is described by a flat `key = value` file (see [`config`]) and
//! produces one CSV per `p` plus a manifest with the configuration echo, the
//! generator name, wall times and SHA-256 digests of every CSV.

pub mod config;
pub mod run;

pub use config::{parse_config, render, ConfigError, ExperimentConfig, ExperimentKind, ModelChoice};
pub use run::{run, RunError, RunSummary};
