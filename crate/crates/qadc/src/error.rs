use std::path::PathBuf;

use thiserror::Error;

pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 1;
pub const EXIT_NOT_CONVERGED: u8 = 2;
pub const EXIT_REGRESSION: u8 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("solver failed: {0}")]
    Solver(qadc_core::Error),
    #[error("cannot write {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot encode output: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn usage_from(e: qadc_core::Error) -> Self {
        CliError::Usage(e.to_string())
    }

    /// Numerical failures map to the non-convergence code; anything else
    /// the core rejects is a bad request.
    pub fn from_core(e: qadc_core::Error) -> Self {
        use qadc_core::Error as E;
        match e {
            E::PowerInfeasible | E::SupportBoundUnsaturated | E::RateOutOfWindow => CliError::Solver(e),
            other => CliError::usage_from(other),
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Solver(_) => EXIT_NOT_CONVERGED,
            _ => EXIT_USAGE,
        }
    }
}
