pub mod bench;
pub mod distill;
pub mod eval;
pub mod pp_predict;
pub mod prompt_render;
pub mod search;
pub mod space;

use perfsearch_core::prompt::{ComponentToggles, PromptError};

use crate::error::CliError;

/// Applies `--ablate role,instr3,...` to a toggle set.
pub fn apply_ablations(toggles: &mut ComponentToggles, ablate: &str) -> Result<(), CliError> {
    for name in ablate.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        match name {
            "role" => toggles.role = false,
            "instr1" => toggles.instr1 = false,
            "instr2" => toggles.instr2 = false,
            "instr3" => toggles.instr3 = false,
            "instr4" => toggles.instr4 = false,
            "instr5" => toggles.instr5 = false,
            "hyperparameters" => toggles.hyperparameters = false,
            "demonstrations" => toggles.demonstrations = false,
            other => {
                return Err(CliError::Config(format!(
                    "unknown prompt component `{other}` (expected role, instr1..instr5, \
                     hyperparameters, demonstrations)"
                )))
            }
        }
    }
    Ok(())
}

/// Prompt errors split into config mistakes (exit 2) and bad input
/// data (exit 3).
pub fn prompt_error(e: PromptError) -> CliError {
    match e {
        PromptError::DemonstrationsMandatory | PromptError::NArchZero => {
            CliError::Config(e.to_string())
        }
        other => CliError::Input(other.to_string()),
    }
}
