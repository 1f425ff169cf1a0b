//! File formats, rayon-parallel search and the `pbcs` command-line tool on
//! top of [`pbcs_core`].

pub mod commands;
pub mod input;
pub mod output;
pub mod parallel;
pub mod reference;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}: {1}")]
    Io(String, #[source] std::io::Error),
    #[error("malformed input: {0}")]
    Json(#[from] serde_json::Error),
    #[error("malformed input: {0}")]
    Format(String),
    #[error(transparent)]
    Model(#[from] pbcs_core::Error),
    #[error("{0}")]
    Usage(String),
    /// Some reproduced quantity missed its expected value.
    #[error("{failed} of {total} checks failed")]
    Mismatch { failed: usize, total: usize },
}

pub mod exit {
    pub const OK: i32 = 0;
    pub const ERROR: i32 = 1;
    pub const INVALID_SYSTEM: i32 = 2;
    pub const NOT_SIMPLE: i32 = 3;
    pub const BUDGET_EXCEEDED: i32 = 4;
    pub const MISMATCH: i32 = 5;
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use pbcs_core::Error as E;
        match self {
            CliError::Model(E::InvalidSystem) => exit::INVALID_SYSTEM,
            CliError::Model(E::NotSimple { .. }) => exit::NOT_SIMPLE,
            CliError::Model(E::BudgetExceeded { .. }) => exit::BUDGET_EXCEEDED,
            CliError::Mismatch { .. } => exit::MISMATCH,
            _ => exit::ERROR,
        }
    }
}
