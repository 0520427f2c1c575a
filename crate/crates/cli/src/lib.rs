//! Configuration ingestion and scenario orchestration for `nli`.

pub mod config;
pub mod runner;

pub use config::{parse_str, ConfigError, ConfigFile, Scenario};
pub use runner::{run, run_file, Format, RunError, RunManifest, RunOptions, ScanParam, Stage};
