use alloc::string::String;
use core::fmt;

/// Errors produced by the numerical core.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation
    /// (non-positive length, area or volume, `xi <= eta`, ...).
    Domain(String),
    /// The caller asked for something the operation does not support.
    Usage(String),
    /// A pivot fell below the singularity threshold during factorization.
    Singular { pivot: usize },
    /// The constraint gradient vanished, so there is no tangent space.
    DegenerateConstraint,
    /// Newton's method did not reach the residual tolerance.
    CorrectorFailed { iterations: usize, residual: f64 },
    /// An iterate left the feasible region (non-positive edge, non-realizable tetrahedron).
    DomainExit,
    /// The symmetry group failed its closure check.
    GroupConstruction(String),
    /// Branch switching was refused because the critical eigenvalue does not
    /// cross transversally; carries the estimated parameter derivative.
    NotTransversal { derivative: f64 },
    /// Continuation could not take even a minimum-size step.
    TraceAborted(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain(msg) => write!(f, "domain error: {msg}"),
            Error::Usage(msg) => write!(f, "usage error: {msg}"),
            Error::Singular { pivot } => write!(f, "singular system (pivot {pivot})"),
            Error::DegenerateConstraint => write!(f, "constraint gradient vanishes"),
            Error::CorrectorFailed { iterations, residual } => write!(
                f,
                "corrector failed after {iterations} iterations (residual {residual:e})"
            ),
            Error::DomainExit => write!(f, "iterate left the feasible domain"),
            Error::GroupConstruction(msg) => write!(f, "group construction failed: {msg}"),
            Error::NotTransversal { derivative } => write!(
                f,
                "transversality fails (critical eigenvalue derivative {derivative:e})"
            ),
            Error::TraceAborted(msg) => write!(f, "trace aborted: {msg}"),
        }
    }
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn usage(msg: impl Into<String>) -> Error {
    Error::Usage(msg.into())
}

impl core::error::Error for Error {}
