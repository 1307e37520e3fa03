use thiserror::Error;

/// Errors raised by the numerical pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A driving with zero energy cannot be renormalized or used to write.
    #[error("degenerate driving: {0}")]
    DegenerateDriving(String),

    /// A response function (or written spin wave) has vanishing norm.
    #[error("degenerate response: {0}")]
    DegenerateResponse(String),

    /// The alternating bracket series lost all significance.
    #[error("numerical cancellation at t = {t}: bracket = {bracket:e}; use quadrature mode")]
    NumericalCancellation { t: f64, bracket: f64 },

    #[error("value out of representable range: {0}")]
    Range(String),

    /// Eigen-analysis produced values outside the admissible band.
    #[error("spectrum inconsistency: {0}")]
    Spectrum(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
