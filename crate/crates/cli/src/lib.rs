//! Batch driver for the warpcurv suites: loads a TOML scenario config,
//! runs the listed operations in order and writes one JSON report per
//! operation, CSV plot tables and a summary.
//!
//! Every number written comes from a `warpcurv` operation; this crate only
//! parses, dispatches and serializes.

use std::path::PathBuf;

pub mod config;
pub mod report;
pub mod run;

pub use config::{Category, Operation, ScenarioConfig};
pub use run::{run, Overrides, RunOutcome, Status};

/// Environment variable naming the default output directory.
pub const OUT_ENV: &str = "WARPCURV_OUT";
/// Used when neither `--out`, `[output] dir` nor `WARPCURV_OUT` is set.
pub const DEFAULT_OUT: &str = "warpcurv-reports";

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATION: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("cannot read config {}: {reason}", path.display())]
    MissingFile { path: PathBuf, reason: String },
    #[error("config schema violation: {0}")]
    Schema(String),
    #[error("{0}")]
    Core(#[from] warpcurv::Error),
    #[error("cannot write {}: {reason}", path.display())]
    Output { path: PathBuf, reason: String },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        EXIT_CONFIG
    }
}
