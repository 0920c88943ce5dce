//! Declarative front end for `intrinsic-core`: TOML run configurations,
//! certification reports, trajectory CSVs and report bundles.

pub mod commands;
pub mod config;
pub mod scenario;

use std::path::PathBuf;

use intrinsic_core::{Error as CoreError, Verdict};

/// Exit status for success without a verdict, and for a stable verdict.
pub const EXIT_OK: u8 = 0;
pub const EXIT_CONFIG: u8 = 1;
pub const EXIT_NOT_STABLE: u8 = 2;
pub const EXIT_MARGINAL: u8 = 3;
pub const EXIT_CLOSURE_TOO_LARGE: u8 = 4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// A problem with the configuration, anchored to a line when known.
    #[error("{}{message}", location(path, *line))]
    Config { path: PathBuf, line: Option<usize>, message: String },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("writing CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    Core(#[from] CoreError),
}

fn location(path: &std::path::Path, line: Option<usize>) -> String {
    match line {
        Some(l) => format!("{}:{l}: ", path.display()),
        None => format!("{}: ", path.display()),
    }
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }
}

/// Maps the outcome of a command to the process exit status.
pub fn exit_code(outcome: &Result<Option<Verdict>, CliError>) -> u8 {
    match outcome {
        Ok(None) | Ok(Some(Verdict::Stable)) => EXIT_OK,
        Ok(Some(Verdict::NotIntrinsicallyStable)) => EXIT_NOT_STABLE,
        Ok(Some(Verdict::Marginal)) => EXIT_MARGINAL,
        Err(CliError::Core(e))
            if matches!(e.root(), CoreError::ClosureTooLarge { .. } | CoreError::EnumerationCapExceeded { .. }) =>
        {
            EXIT_CLOSURE_TOO_LARGE
        }
        Err(_) => EXIT_CONFIG,
    }
}
