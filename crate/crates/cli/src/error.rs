use std::fmt;

use corridor_core::scenario::ScenarioError;
use corridor_core::Error;

pub const CONFIG: i32 = 2;
pub const INFEASIBLE: i32 = 3;
pub const FAULT: i32 = 4;
pub const DIVERGENCE: i32 = 5;

/// A failure with the process exit code it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        Self {
            code: CONFIG,
            message: message.into(),
        }
    }

    /// Prefixes the message, keeping the code.
    pub fn context(self, what: impl fmt::Display) -> Self {
        Self {
            code: self.code,
            message: format!("{what}: {}", self.message),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Scenario(ScenarioError::Infeasible(_)) => INFEASIBLE,
            Error::Scenario(ScenarioError::Sim(_)) | Error::Sim(_) => FAULT,
            Error::Divergence { .. } => DIVERGENCE,
            // Bad parameters, unreadable files and unwritable outputs are
            // all things the caller has to fix.
            _ => CONFIG,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::config(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        Self::config(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
