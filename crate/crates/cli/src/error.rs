use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Schema or parameter problem, reported with the offending key path.
    #[error("config error at `{path}`: {reason}")]
    Config { path: String, reason: String },

    #[error(transparent)]
    Run(roughflow::Error),

    #[error("cannot access {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn config(path: impl Into<String>, reason: impl Into<String>) -> Self {
        CliError::Config { path: path.into(), reason: reason.into() }
    }

    /// 0 ok, 2 config, 3 divergence, 4 infeasible, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } | CliError::Run(roughflow::Error::Config(_)) => 2,
            CliError::Run(roughflow::Error::Divergence { .. }) => 3,
            CliError::Run(roughflow::Error::Infeasible { .. }) => 4,
            _ => 1,
        }
    }
}

impl From<roughflow::Error> for CliError {
    fn from(e: roughflow::Error) -> Self {
        CliError::Run(e)
    }
}

/// Turns parameter errors into config errors under `section`.
pub(crate) fn at(section: &'static str) -> impl Fn(roughflow::Error) -> CliError {
    move |e| match e {
        roughflow::Error::Param { field, reason } => CliError::config(format!("{section}.{field}"), reason),
        other => CliError::Run(other),
    }
}
