//! File formats, the remote-LLM predictor, and the command
//! implementations behind the `perfsearch` binary.

pub mod commands;
pub mod error;
pub mod formats;
pub mod llm;
pub mod manifest;
pub mod predspec;

pub use error::{CliError, ExitCode};
