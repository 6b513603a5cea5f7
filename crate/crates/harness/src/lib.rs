//! Experiment orchestration for the learning library: TOML configs, seeded
//! multi-run execution, aggregation, CSV emission, and static SVG plots.

pub mod config;
pub mod maps;
pub mod plot;
pub mod run;
pub mod stats;
pub mod sweep;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error("runtime error: {0}")]
    Runtime(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl HarnessError {
    /// Process exit code: 2 for configuration problems, 3 for runtime
    /// failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            _ => 3,
        }
    }
}

impl From<mobles_core::agents::AgentError> for HarnessError {
    fn from(e: mobles_core::agents::AgentError) -> Self {
        HarnessError::Runtime(e.to_string())
    }
}

impl From<toml::de::Error> for HarnessError {
    fn from(e: toml::de::Error) -> Self {
        HarnessError::Config(e.to_string())
    }
}
