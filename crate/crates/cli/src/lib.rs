//! Configuration parsing and experiment orchestration for the `dynloc`
//! command-line tool.

pub mod config;
pub mod run;

pub use config::{emit, parse_config, Experiment, Grid, RunConfig};
pub use run::run;

/// Failure of a run, split by exit status.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CliError {
    /// Bad configuration or arguments; exit status 1.
    Validation(String),
    /// Anything that went wrong while computing or writing; exit status 2.
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "invalid configuration: {m}"),
            CliError::Runtime(m) => write!(f, "run failed: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/cli.md")]
mod book {}
