use std::fmt;

/// Error type shared by all estimation and analysis routines.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A caller-supplied argument violates a precondition.
    InvalidArgument(String),
    /// A certificate's hypothesis does not hold for the given tuning.
    HypothesisViolated(String),
    /// Tuning calibration could not bracket a root.
    CalibrationFailed(String),
    /// A fit did not converge in a context that requires convergence.
    NonConvergence(String),
    /// A weighted component update received zero total weight.
    DegenerateComponent,
    /// Numerical state that should be unreachable for valid inputs.
    Internal(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
            Error::HypothesisViolated(msg) => write!(f, "hypothesis violated: {msg}"),
            Error::CalibrationFailed(msg) => write!(f, "calibration failed: {msg}"),
            Error::NonConvergence(msg) => write!(f, "no convergence: {msg}"),
            Error::DegenerateComponent => write!(f, "degenerate component: zero total weight"),
            Error::Internal(msg) => write!(f, "internal error: {msg}"),
        }
    }
}

impl std::error::Error for Error {}

pub type Result<T> = std::result::Result<T, Error>;
