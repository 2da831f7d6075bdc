//! Error taxonomy with stable process exit codes:
//! 0 success, 2 usage/config, 3 input data, 4 infeasible search,
//! 5 transport.

use std::path::Path;

pub type ExitCode = i32;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Input(String),
    #[error("search infeasible: {0}")]
    Infeasible(String),
    #[error("transport: {0}")]
    Transport(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Config(_) => 2,
            CliError::Input(_) => 3,
            CliError::Infeasible(_) => 4,
            CliError::Transport(_) => 5,
        }
    }

    pub fn input_at(path: &Path, message: impl std::fmt::Display) -> Self {
        CliError::Input(format!("{}: {message}", path.display()))
    }

    pub fn input_at_line(path: &Path, line: usize, message: impl std::fmt::Display) -> Self {
        CliError::Input(format!("{}:{line}: {message}", path.display()))
    }
}
