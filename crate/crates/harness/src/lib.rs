//! Configuration-driven experiment runner for `quasijacobi`.
//!
//! A TOML config names a model, a frequency, scales and per-command
//! parameters; [`run::run`] executes the listed commands and writes CSV
//! tables, JSON summaries and a `manifest.json` with content hashes.

pub mod config;
pub mod output;
pub mod run;
pub mod suites;
pub mod tasks;

pub use config::{Command, ConfigError, ExperimentConfig, PresetName};
pub use run::{run, RunError, RunOptions, RunOutcome};
