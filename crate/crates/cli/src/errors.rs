//! Driver-level errors and their process exit codes.
//!
//! The contract is scriptable: 0 = completed, 2 = the solver tripped its
//! blow-up guard mid-run, 1 = everything else (configuration, i/o, or
//! format problems detected before or after stepping).

use cns_core::CnsError;
use std::process::ExitCode;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Configuration file problem, located by line.
    #[error("{path}:{line}: {msg}")]
    Config {
        path: String,
        line: usize,
        msg: String,
    },
    /// Configuration problem without a single offending line.
    #[error("configuration: {0}")]
    Invalid(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: bad magic (not a CNSF snapshot)")]
    BadMagic { path: String },
    #[error("{path}: unsupported snapshot version {found} (this reader handles version 1)")]
    VersionMismatch { path: String, found: u32 },
    /// Payload length disagrees with the header (short read or trailing
    /// bytes).
    #[error("{path}: payload size mismatch: expected {expected} bytes, found {actual}")]
    TruncatedPayload {
        path: String,
        expected: usize,
        actual: usize,
    },
    #[error(transparent)]
    Core(#[from] CnsError),
}

impl CliError {
    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Core(CnsError::SolverDiverged { .. }) => ExitCode::from(2),
            _ => ExitCode::from(1),
        }
    }
}
