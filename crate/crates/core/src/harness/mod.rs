//! Experiment configuration, orchestration, result files and the CLI.

mod cli;
mod config;
mod run;

use thiserror::Error;

use crate::analysts::AnalystError;
use crate::domain::DomainError;
use crate::mechanisms::MechanismError;
use crate::privacy::PrivacyError;
use crate::verify::VerifyError;

pub use cli::{cli_main, EXIT_CHECK_FAILED, EXIT_INTERNAL, EXIT_OK, EXIT_VALIDATION};
pub use config::{ExperimentConfig, PopulationSpec, SizeSource};
pub use run::{
    execute, run_experiment, sidecar_path, ExperimentResult, ExperimentSummary, CSV_COLUMNS,
};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error at {}: {reason}", location(section, key, *line))]
    Config {
        section: String,
        key: String,
        line: usize,
        reason: String,
    },
    #[error("i/o error on {path}: {reason}")]
    Io { path: String, reason: String },
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Mechanism(#[from] MechanismError),
    #[error(transparent)]
    Analyst(#[from] AnalystError),
    #[error(transparent)]
    Privacy(#[from] PrivacyError),
    #[error(transparent)]
    Verify(#[from] VerifyError),
}

fn location(section: &str, key: &str, line: usize) -> String {
    let mut s = match (section.is_empty(), key.is_empty()) {
        (false, false) => format!("{section}.{key}"),
        (false, true) => format!("[{section}]"),
        (true, false) => key.to_string(),
        (true, true) => "config".to_string(),
    };
    if line > 0 {
        s.push_str(&format!(" (line {line})"));
    }
    s
}

impl HarnessError {
    pub(crate) fn config(section: &str, key: &str, line: usize, reason: String) -> Self {
        HarnessError::Config {
            section: section.into(),
            key: key.into(),
            line,
            reason,
        }
    }

    pub(crate) fn io(path: &std::path::Path, e: impl std::fmt::Display) -> Self {
        HarnessError::Io {
            path: path.display().to_string(),
            reason: e.to_string(),
        }
    }

    /// Whether the error comes from bad input rather than a failure while running.
    pub fn is_validation(&self) -> bool {
        match self {
            HarnessError::Config { .. } | HarnessError::Analyst(_) | HarnessError::Privacy(_) => {
                true
            }
            HarnessError::Mechanism(e) => matches!(
                e,
                MechanismError::InvalidConfig { .. }
                    | MechanismError::DatasetTooSmall { .. }
                    | MechanismError::UniverseNotTabulatable(_)
            ),
            HarnessError::Domain(e) => !matches!(e, DomainError::Csv(_)),
            HarnessError::Verify(e) => matches!(
                e,
                VerifyError::InvalidParameter { .. }
                    | VerifyError::TooLarge { .. }
                    | VerifyError::ConditionViolated { .. }
            ),
            HarnessError::Io { .. } => false,
        }
    }
}
