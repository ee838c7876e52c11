//! Experiment harness for the qubit-chain simulations: scenario configs,
//! runners, CSV tables and reproducibility manifests.

pub mod analysis;
pub mod cli;
pub mod config;
pub mod manifest;
pub mod scenarios;
pub mod table;

pub use config::{ExperimentConfig, Scenario};
pub use manifest::{export, verify, RunManifest};
pub use scenarios::{run, Check, ScenarioOutput};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Sim(#[from] qchain::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("refusing to overwrite {0} (use --force)")]
    Exists(String),
    #[error("seeds: {0}")]
    Seeds(String),
}

pub type Result<T> = std::result::Result<T, RunError>;
