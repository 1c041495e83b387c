//! Library surface of the pipeline binary: run configuration, stage
//! implementations, and the end-to-end driver, exposed so integration
//! tests can call them directly.

pub mod config;
pub mod pipeline;

use thiserror::Error;

pub use config::RunConfig;
pub use pipeline::{run_pipeline, verify_theory, RunArtifacts};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("error[{0}]: {1}")]
    Stage(String, String),
    #[error("i/o error on {0}: {1}")]
    Io(String, std::io::Error),
}

impl CliError {
    /// Tag an underlying error with its pipeline stage.
    pub fn stage<E: std::fmt::Display>(stage: &str, err: E) -> Self {
        CliError::Stage(stage.into(), err.to_string())
    }
}
