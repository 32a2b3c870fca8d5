//! Error types shared across the crate.

use thiserror::Error;

/// Coarse error class; the CLI maps these to exit codes
/// (1 = parse, 2 = precondition, 3 = numeric).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Parse,
    Precondition,
    Numeric,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("graph is empty after pruning states without outgoing edges")]
    EmptyGraph,

    #[error("duplicate edge {from:?} -> {to:?} at position {position}")]
    DuplicateEdge {
        from: String,
        to: String,
        position: usize,
    },

    #[error("unknown state {0:?}")]
    UnknownState(String),

    #[error("graph is not strongly connected")]
    NotStronglyConnected,

    #[error("graph has period {period}; decompose spectrally first")]
    NotAperiodic { period: usize },

    #[error("length {n} exceeds the enumeration cap {cap}")]
    CapExceeded { n: usize, cap: usize },

    #[error("power iteration did not converge within {iters} iterations (last residual {residual:e})")]
    NonConvergence { iters: usize, residual: f64 },

    #[error("generating function diverges at z = {z} (radius {radius})")]
    Divergent { z: f64, radius: f64 },

    #[error("no equilibrium measure: {0}")]
    NoMeasure(String),

    #[error("invalid edge partition: {0}")]
    BadPartition(String),

    #[error("argument outside admissible domain: {0}")]
    Domain(String),

    #[error("inadmissible word {0:?}")]
    InadmissibleWord(String),

    #[error("word of length {len} is shorter than memory {memory}")]
    WordTooShort { len: usize, memory: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Error class for CLI exit codes.
    pub fn class(&self) -> ErrorClass {
        use Error::*;
        match self {
            Parse(_) | Io(_) | DuplicateEdge { .. } | UnknownState(_) => ErrorClass::Parse,
            EmptyGraph
            | NotStronglyConnected
            | NotAperiodic { .. }
            | CapExceeded { .. }
            | BadPartition(_)
            | Domain(_)
            | InadmissibleWord(_)
            | WordTooShort { .. } => ErrorClass::Precondition,
            NonConvergence { .. } | Divergent { .. } | NoMeasure(_) => ErrorClass::Numeric,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
