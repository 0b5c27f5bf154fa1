//! Command-line front end for `ebm-core`: JSON configs, CSV/JSON output and
//! the oracle suite behind `ebm validate`.

pub mod commands;
pub mod config;
pub mod format;
pub mod oracle;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// 2 for bad input, 3 for numerical trouble. IO problems count as input
    /// problems since they almost always come from a bad path.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl From<ebm_core::Error> for CliError {
    fn from(e: ebm_core::Error) -> Self {
        match e {
            ebm_core::Error::InvalidParams(msg) => CliError::Config(msg),
            other => CliError::Numerical(other.to_string()),
        }
    }
}
