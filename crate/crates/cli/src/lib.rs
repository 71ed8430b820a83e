//! Configuration loading, command orchestration and reports for the
//! `stochabs` command-line tool.

pub mod app;
pub mod commands;
pub mod config;
pub mod report;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{0}")]
    Failed(String),
    #[error("i/o: {0}")]
    Io(String),
}

impl CliError {
    /// 2 for unusable input, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            _ => 1,
        }
    }
}

macro_rules! failed_from {
    ($($t:ty),*) => {
        $(impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Failed(e.to_string())
            }
        })*
    };
}

failed_from!(
    stochabs::certificates::CertError,
    stochabs::composition::CompError,
    stochabs::bounds::BoundError,
    stochabs::montecarlo::McError,
    stochabs::speclang::SpecError,
    stochabs::systems::SystemError
);
