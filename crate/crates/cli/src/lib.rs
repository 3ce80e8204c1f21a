//! Command-line front end: TOML config, CSV ingestion, and file outputs for the
//! `hydro-fpv` solver.

pub mod bundle;
pub mod commands;
pub mod config;
pub mod error;
pub mod ingest;
pub mod output;

pub use config::Config;
pub use error::CliError;
pub use output::Outputs;
