//! Front end for strymgen: pipeline files, code generation, checking and the
//! benchmark harness.

pub mod commands;
pub mod suite;

use strymgen_core::spec::SpecError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Spec(#[from] SpecError),
    #[error("{0}")]
    Mismatch(String),
}

impl CliError {
    /// 1 for a failed check, 2 for bad input.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Mismatch(_) => 1,
            CliError::Usage(_) | CliError::Spec(_) => 2,
        }
    }
}
