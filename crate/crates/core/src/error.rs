//! Error type shared by all modules of the crate.

use core::fmt;

/// Errors produced by the learning and simulation primitives.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A vector had a different length than the kernel or model expects.
    DimensionMismatch { expected: usize, got: usize },
    /// An input contained NaN or infinity.
    NonFinite(&'static str),
    /// A precondition on an argument was violated.
    InvalidArgument(&'static str),
    /// R² is undefined because the truth vector is constant.
    UndefinedScore,
    /// The simulator produced a non-finite state.
    SimulationDiverged { time: f64 },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
            Error::NonFinite(what) => write!(f, "non-finite value in {what}"),
            Error::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
            Error::UndefinedScore => {
                write!(f, "R² undefined: truth vector is constant")
            }
            Error::SimulationDiverged { time } => {
                write!(f, "simulation diverged at t = {time} s")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
