//! Configuration-driven experiment pipeline: collect → fit → plan → eval,
//! plus the post-hoc chance-constraint audit and the SHGO benchmark.
//!
//! Stages communicate through files under the output directory, so any
//! stage can be rerun on its own. CSV and JSON bodies depend only on the
//! configuration and master seed; wall-clock times go to `manifests/`.

pub mod bench;
pub mod commands;
pub mod config;
pub mod layout;
pub mod verify;

use ccgp::harness::HarnessError;
use thiserror::Error;

pub use config::RunConfig;
pub use layout::Layout;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("{0}")]
    Io(String),
    #[error(transparent)]
    Harness(#[from] HarnessError),
}

impl CliError {
    /// 1 for invariant violations and run failures, 2 for configuration
    /// and input errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) | CliError::Harness(HarnessError::Config(_)) => 2,
            CliError::Invariant(_) | CliError::Harness(_) => 1,
        }
    }
}

/// Runs collect, fit, plan and eval in order.
pub fn pipeline(config: &RunConfig) -> Result<commands::EvalSummary, CliError> {
    commands::collect(config)?;
    commands::fit(config)?;
    commands::plan(config)?;
    commands::eval(config)
}
