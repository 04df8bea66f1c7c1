//! File formats and command implementations for the companion binary.
//!
//! Exit-code contract: 0 success, 2 input error (parse failures, unknown
//! keys), 3 precondition error (shape conflicts, infeasible subset sizes,
//! out-of-range indices), 4 numerical error (singular fits, degenerate
//! searches).

pub mod commands;
pub mod fit_json;
pub mod mxt;
pub mod scenario;

use thiserror::Error;

use crate::error::Error as CoreError;

/// Errors surfaced by the command layer, each mapping to a stable exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}{message}", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
    Input {
        line: Option<usize>,
        message: String,
    },
    #[error("{0}")]
    Precondition(String),
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn input(message: impl Into<String>) -> Self {
        CliError::Input {
            line: None,
            message: message.into(),
        }
    }

    pub fn input_at(line: usize, message: impl Into<String>) -> Self {
        CliError::Input {
            line: Some(line),
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input { .. } => 2,
            CliError::Precondition(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match &e {
            CoreError::SubsetTooSmall { .. }
            | CoreError::InvalidConfig(_)
            | CoreError::ShapeMismatch { .. } => CliError::Precondition(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::input(e.to_string())
    }
}

/// Full-precision decimal rendering: 17 significant digits round-trip every
/// finite f64 exactly.
pub fn fmt_full(x: f64) -> String {
    format!("{x:.16e}")
}

/// Summary-statistics rendering at 6 significant digits.
pub fn fmt_summary(x: f64) -> String {
    format!("{x:.5e}")
}
