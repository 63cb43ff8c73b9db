use std::path::PathBuf;

use saom_core::ErrorCategory;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Model(#[from] saom_core::Error),
    #[error("config: {0}")]
    Config(String),
    #[error("{path}: {message}")]
    Data { path: PathBuf, message: String },
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error("convergence check failed: largest |t-ratio| {max_ratio:.3} is not below {threshold}")]
    NotConverged {
        max_ratio: f64,
        threshold: f64,
        /// Estimate table, still worth showing.
        report: String,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Model(e) => match e.category() {
                ErrorCategory::Config => 2,
                ErrorCategory::Data => 3,
                ErrorCategory::Numerical => 4,
                ErrorCategory::NonConvergence => 5,
            },
            CliError::Config(_) | CliError::Read { .. } => 2,
            CliError::Data { .. } => 3,
            CliError::Write { .. } => 2,
            CliError::NotConverged { .. } => 5,
        }
    }

    pub fn hint(&self) -> &'static str {
        match self {
            CliError::Model(e) => e.hint(),
            CliError::Config(_) => "see the configuration reference in the README",
            CliError::Read { .. } => "paths in the config are relative to the config file",
            CliError::Data { .. } => "wave files hold n rows of n 0/1 tokens; covariates one number per line",
            CliError::Write { .. } => "check that the output directory is writable",
            CliError::NotConverged { .. } => "rerun with more iterations or max_runs, or from the reported estimate",
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
