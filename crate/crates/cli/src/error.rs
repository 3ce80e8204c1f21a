use hydro_fpv::{ModelError, OracleError, PolicyError, PricerError, ScenarioError};
use serde::Serialize;
use thiserror::Error;

use crate::ingest::IngestError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error("invalid inputs: {}", .0.join("; "))]
    Validation(Vec<String>),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Pricer(#[from] PricerError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("writing {path}: {source}")]
    Output {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Ingest(_) => "ingest",
            CliError::Validation(_) => "validation",
            CliError::Model(_) => "model",
            CliError::Policy(_) => "policy",
            CliError::Pricer(_) => "pricer",
            CliError::Oracle(_) => "oracle",
            CliError::Scenario(_) => "scenario",
            CliError::Output { .. } => "output",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Output { .. } => 1,
            CliError::Config(_) => 2,
            CliError::Ingest(_) => 3,
            CliError::Validation(_) => 4,
            CliError::Model(_) => 5,
            CliError::Policy(_) => 6,
            CliError::Pricer(_) => 7,
            CliError::Oracle(_) => 8,
            CliError::Scenario(_) => 9,
        }
    }

    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Report<'a> {
            error: &'a str,
            exit_code: i32,
            message: String,
        }
        serde_json::to_string(&Report {
            error: self.kind(),
            exit_code: self.exit_code(),
            message: self.to_string(),
        })
        .unwrap_or_else(|_| format!("{{\"error\":\"{}\"}}", self.kind()))
    }
}
