//! CLI errors and their exit codes.

use thiserror::Error;

pub const EXIT_DECOHERENT: u8 = 0;
pub const EXIT_NOT_DECOHERENT: u8 = 1;
pub const EXIT_MARGINAL: u8 = 2;
pub const EXIT_PARSE: u8 = 64;
pub const EXIT_INVARIANT: u8 = 65;
pub const EXIT_NO_INPUT: u8 = 66;
pub const EXIT_IO: u8 = 74;

#[derive(Debug, Error)]
pub enum CliError {
    /// Malformed command line, model file or scenario parameters.
    #[error("parse error: {0}")]
    Parse(String),

    /// Input parsed but violates a model invariant.
    #[error("invalid model: {0}")]
    Invariant(String),

    /// A required input (file, final state) is missing.
    #[error("missing input: {0}")]
    NoInput(String),

    #[error("I/O error: {0}")]
    Io(String),

    /// The requested quantity needs a decoherence condition that fails.
    #[error("{0}")]
    Condition(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Parse(_) => EXIT_PARSE,
            CliError::Invariant(_) => EXIT_INVARIANT,
            CliError::NoInput(_) => EXIT_NO_INPUT,
            CliError::Io(_) => EXIT_IO,
            CliError::Condition(_) => EXIT_NOT_DECOHERENT,
        }
    }
}

impl From<histories_core::Error> for CliError {
    fn from(e: histories_core::Error) -> Self {
        use histories_core::Error as E;
        match e {
            E::ConditionNotSatisfied(_) => CliError::Condition(e.to_string()),
            E::Scenario(_) => CliError::Parse(e.to_string()),
            other => CliError::Invariant(other.to_string()),
        }
    }
}
