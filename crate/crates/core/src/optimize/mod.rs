//! Bundled linear and semidefinite programming solvers.

pub mod linalg;
pub mod lp;
pub mod sdp;

use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OptimizeError {
    #[error("malformed program: {0}")]
    MalformedProgram(String),
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
}

pub type Result<T> = std::result::Result<T, OptimizeError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
    MaxIterations,
    /// The solver stopped making progress before reaching its tolerance.
    Stalled,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Optimal => "optimal",
            Status::Infeasible => "infeasible",
            Status::Unbounded => "unbounded",
            Status::MaxIterations => "max-iterations",
            Status::Stalled => "stalled",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Sense {
    Maximize,
    Minimize,
}
