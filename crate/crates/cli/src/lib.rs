//! Experiment runner for gkpsim: flag- or JSON-configured runs that write
//! CSV and JSON datasets with a self-describing metadata header.

pub mod args;
pub mod commands;
pub mod error;
pub mod output;

pub use args::{Cli, Command, ExperimentConfig};
pub use error::{CliError, CliResult};
