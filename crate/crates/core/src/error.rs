use thiserror::Error;

use crate::beam::Branch;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A parameter violates its type invariant. `field` is a dotted path.
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },

    #[error("invalid beam characteristics: {0}")]
    InvalidCharacteristics(String),

    #[error(
        "no oscillation: supply current {current} A does not exceed the minimum {min_current} A"
    )]
    NoOscillation { current: f64, min_current: f64 },

    #[error("invalid tolerance {0} (must be > 0)")]
    InvalidTolerance(f64),

    #[error("displacement {w} mm lies outside branch {branch:?}")]
    OutOfBranch { w: f64, branch: Branch },

    #[error("equilibrium solve did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("insufficient cycles: found {found} same-direction snaps, need at least {required}")]
    InsufficientCycles { found: usize, required: usize },

    #[error("degenerate dataset: {0}")]
    DegenerateDataset(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("repeated snap events at t = {t} s without progress")]
    EventStorm { t: f64 },

    #[error("I/O error: {0}")]
    Io(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// Short stable identifier, used by the command-line front end.
    pub fn name(&self) -> &'static str {
        match self {
            Error::InvalidParameter { .. } => "InvalidParameter",
            Error::InvalidCharacteristics(_) => "InvalidCharacteristics",
            Error::NoOscillation { .. } => "NoOscillation",
            Error::InvalidTolerance(_) => "InvalidTolerance",
            Error::OutOfBranch { .. } => "OutOfBranch",
            Error::NoConvergence { .. } => "NoConvergence",
            Error::InsufficientCycles { .. } => "InsufficientCycles",
            Error::DegenerateDataset(_) => "DegenerateDataset",
            Error::Infeasible(_) => "Infeasible",
            Error::EventStorm { .. } => "EventStorm",
            Error::Io(_) => "Io",
            Error::Parse(_) => "Parse",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
