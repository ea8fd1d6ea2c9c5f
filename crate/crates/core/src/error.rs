use thiserror::Error;

/// Errors for lattice/transport computations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("configuration space mismatch")]
    SpaceMismatch,

    #[error("capacity exceeded: {states} states > cap {cap}")]
    Capacity { states: u128, cap: u64 },

    #[error("symbol {symbol} out of range for alphabet of size {alphabet}")]
    SymbolOutOfRange { symbol: usize, alphabet: usize },

    #[error("site {0:?} not in volume")]
    SiteNotInVolume(Vec<i64>),

    #[error("exponent must satisfy {0}")]
    BadExponent(&'static str),

    #[error("measure not normalized: sum = {0}")]
    NotNormalized(f64),

    #[error("negative probability at index {idx}: {value}")]
    NegativeProbability { idx: usize, value: f64 },

    #[error("infeasible marginals: {0}")]
    InfeasibleMarginals(String),

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("{0}")]
    Config(String),
}

pub type Result<T> = core::result::Result<T, Error>;
