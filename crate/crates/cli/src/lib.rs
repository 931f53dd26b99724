//! Command-line driver for the jump-diffusion implied-volatility experiments.
//!
//! Scenarios are TOML files describing a [`ModelConfig`](jdsv_core::engine::ModelConfig)
//! template and a sweep; the bundled set reproduces the published figures and table.

pub mod report;
pub mod scenario;

use thiserror::Error;

pub use report::{run_scenario, theory_rows, write_theory, RunSummary, CSV_HEADER};
pub use scenario::{bundled, list, resolve, Scenario};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical failure in {module}: {message}")]
    Numerical {
        module: &'static str,
        message: String,
    },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical { .. } => 3,
            CliError::Io(_) | CliError::Csv(_) => 1,
        }
    }
}

impl From<jdsv_core::Error> for CliError {
    fn from(e: jdsv_core::Error) -> Self {
        if e.is_validation() {
            CliError::Config(e.to_string())
        } else {
            CliError::Numerical {
                module: e.module(),
                message: e.to_string(),
            }
        }
    }
}
