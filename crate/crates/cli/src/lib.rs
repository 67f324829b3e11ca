//! Command-line front end for the `fellerdep` toolkit.

pub mod config;
pub mod run;

use std::path::PathBuf;

use fellerdep::FellerError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(FellerError),
    #[error("run failed: {0}")]
    Run(FellerError),
    #[error("cannot write `{path}`: {source}")]
    Output {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    /// Every error maps to exit code 2; failed checks use 1.
    pub fn exit_code(&self) -> i32 {
        2
    }
}
