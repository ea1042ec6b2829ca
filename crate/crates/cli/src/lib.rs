//! Config-driven runner for roughflow experiments.
//!
//! A run reads one TOML file, computes every artifact in memory, writes them
//! to the output directory and finishes with `manifest.json`, which records
//! the config hash, seed, checksums and every defaulted parameter.

pub mod config;
pub mod error;
pub mod run;
pub mod sweep;

pub use config::{load_config, parse_config, ExperimentConfig, Kind};
pub use error::CliError;
pub use run::{run, RunManifest, RunOptions};
