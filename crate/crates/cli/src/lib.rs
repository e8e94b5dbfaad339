//! Command-line driver: configuration parsing, experiment dispatch and
//! output files.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod output;
pub mod run;

use ionmotion::Error;

pub use config::{parse_config, ConfigError, RunConfig};

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const CONFIG: i32 = 1;
    pub const GUARD: i32 = 2;
    pub const FAILED: i32 = 3;
    pub const INTERRUPTED: i32 = 130;
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Run(#[from] Error),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => exit::CONFIG,
            CliError::Run(e) if e.is_numerical_guard() => exit::GUARD,
            CliError::Run(Error::Cancelled) => exit::INTERRUPTED,
            CliError::Run(Error::InvalidInput(_) | Error::UnknownMode(_) | Error::Resonance(_)) => exit::CONFIG,
            CliError::Run(_) | CliError::Io(_) => exit::FAILED,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        let guard = CliError::Run(Error::Sequence {
            index: 3,
            source: Box::new(Error::Truncation { time: 0.0, population: 1.0 }),
        });
        assert_eq!(guard.exit_code(), exit::GUARD);
        assert_eq!(CliError::Run(Error::Cancelled).exit_code(), exit::INTERRUPTED);
        assert_eq!(CliError::Run(Error::NoFit("x".into())).exit_code(), exit::FAILED);
        assert_eq!(CliError::Run(Error::InvalidInput("x".into())).exit_code(), exit::CONFIG);
        let cfg = ConfigError::Semantic { path: "a".into(), message: "b".into() };
        assert_eq!(CliError::from(cfg).exit_code(), exit::CONFIG);
    }
}
