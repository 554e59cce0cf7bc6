//! Experiment runner for the `optimistic` solvers: trajectories, bound
//! overlays, line-search call tables and multi-method comparisons as CSV.

pub mod cli;
pub mod config;
pub mod output;
pub mod run;

use std::fmt;

/// Exit status 2 for configuration problems, 3 for failed runs.
#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    Config(String),
    Solver(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Solver(_) | CliError::Io(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Solver(m) => write!(f, "solver error: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

pub use cli::run_cli;
