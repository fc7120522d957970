use thiserror::Error;

use crate::solver::DualState;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum UsmoError {
    /// Malformed or inconsistent input data (dimension mismatch, bad index, empty set).
    #[error("input error: {0}")]
    Input(String),

    /// A text file could not be parsed. `line` is 1-based.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// Hyperparameters or derived constants outside their valid range.
    #[error("configuration error: {0}")]
    Config(String),

    /// The solver hit `max_full_scans` before reaching tau-optimality.
    /// Carries the best iterate reached so far.
    #[error("budget exceeded after {full_scans} full scans ({iterations} iterations)")]
    Budget {
        full_scans: usize,
        iterations: usize,
        best: Box<DualState>,
    },

    /// The solver state broke one of its own invariants.
    #[error("internal state error: {0}")]
    InternalState(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl UsmoError {
    pub fn input(msg: impl Into<String>) -> Self {
        UsmoError::Input(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        UsmoError::Config(msg.into())
    }

    pub fn parse(line: usize, msg: impl Into<String>) -> Self {
        UsmoError::Parse { line, msg: msg.into() }
    }

    /// Process exit code used by the command-line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            UsmoError::Input(_) | UsmoError::Parse { .. } | UsmoError::Io(_) => 1,
            UsmoError::Config(_) => 2,
            UsmoError::Budget { .. } => 3,
            UsmoError::InternalState(_) => 4,
        }
    }
}

pub type Result<T, E = UsmoError> = std::result::Result<T, E>;
