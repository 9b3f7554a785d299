//! Error type shared by the solver library.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CnsError {
    /// Grid construction rejected the domain geometry or resolution.
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    /// A Neumann solve was handed a right-hand side whose weighted mean is
    /// not (numerically) zero; the caller must project first.
    #[error("incompatible right-hand side: weighted mean {mean:.3e} exceeds tolerance {tol:.1e}")]
    IncompatibleRHS { mean: f64, tol: f64 },

    /// Blow-up guard tripped: the vorticity grew past 1e6 times its initial
    /// sup norm, so the step size is too large or the run genuinely blew up.
    #[error("solver diverged at t = {t:.6}")]
    SolverDiverged { t: f64 },

    /// An initial-condition preset name that the library does not know.
    #[error("unknown preset: {0}")]
    UnknownPreset(String),

    /// A preset was asked for on a domain it is not defined on.
    #[error("preset {preset} is not defined on this domain: {reason}")]
    PresetDomainMismatch { preset: String, reason: String },

    /// The sup-norm interpolation bound requires decay along the whole
    /// radial line; a profile with O(1) boundary values violates it.
    #[error("decay violation: endpoint magnitude {endpoint:.3e} exceeds 1e-6 of the sup {sup:.3e}")]
    DecayViolation { endpoint: f64, sup: f64 },

    /// An expansion study needs at least two levels to form differences.
    #[error("insufficient levels: need at least 2, got {0}")]
    InsufficientLevels(usize),

    /// No node of the requested box lies inside the annulus shell.
    #[error("empty intersection: no box node lies inside the annulus")]
    EmptyIntersection,

    /// Configuration value out of range or inconsistent.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, CnsError>;
