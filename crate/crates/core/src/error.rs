use thiserror::Error;

use crate::torsor::CoprimeCondition;

/// Errors raised by the library. Every arithmetic path that can overflow
/// reports it instead of wrapping.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("arithmetic overflow in {0}")]
    Overflow(&'static str),

    #[error("all projective coordinates are zero")]
    ZeroPoint,

    #[error("{0} is not prime")]
    NotPrime(u64),

    #[error("prime {p} exceeds the cap {cap}")]
    AboveCap { p: u64, cap: u64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The image of the plane parametrisation lands on one of the three lines.
    #[error("point lies on the lines of the surface (eta7 = 0)")]
    OnLines,

    #[error("coprimality condition {0} violated")]
    Coprimality(CoprimeCondition),

    #[error("torsor equation not satisfied (value {0})")]
    NotOnTorsor(i128),

    #[error("quadrature did not converge: error estimate {err:e} above tolerance {tol:e}")]
    Quadrature { err: f64, tol: f64 },

    #[error("cross-method count mismatch at B = {b}: {detail}")]
    CountMismatch { b: u64, detail: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
