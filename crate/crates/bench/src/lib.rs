//! Experiment orchestration for `maxent-core`: configs, synthetic regime
//! fixtures, figure pipelines, run manifests and cross-run reports.

pub mod artifacts;
pub mod config;
pub mod experiments;
pub mod fixtures;
pub mod manifest;
pub mod report;
pub mod runner;
pub mod summary;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error(transparent)]
    Config(#[from] config::ConfigError),
    #[error(transparent)]
    Core(#[from] maxent_core::Error),
    #[error(transparent)]
    Manifest(#[from] manifest::ManifestError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    Invalid(String),
}
