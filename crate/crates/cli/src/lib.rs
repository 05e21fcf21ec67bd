//! Experiment CLI for `quadsgd-core`: JSON configs, the sweep CSV format,
//! parallel sweeps and the `rates`/`sweep`/`fit`/`diagnose` subcommands.

pub mod commands;
pub mod config;
pub mod error;
pub mod records;
pub mod sweep;

pub use config::CliConfigFile;
pub use error::CliError;
pub use quadsgd_core as core;
