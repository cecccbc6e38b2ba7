//! Command-line orchestration for Parisian ruin experiments: strict JSON
//! configuration, CSV/JSON reports and reproducibility manifests.

pub mod commands;
pub mod config;
pub mod error;
pub mod report;

pub use commands::{run, Cli, Command};
pub use error::{CliError, Result};
