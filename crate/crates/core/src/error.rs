use thiserror::Error;

/// Errors raised by the numerical toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch in {op}: {left:?} vs {right:?}")]
    DimensionMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("{op} requires a square matrix, got {rows}x{cols}")]
    NotSquare {
        op: &'static str,
        rows: usize,
        cols: usize,
    },

    #[error("matrix has {got} entries, expected {expected}")]
    EntryCount { expected: usize, got: usize },

    #[error("non-finite entry in matrix")]
    NonFinite,

    #[error("dimension {dim} exceeds the cap of {max} for {op}")]
    DimensionTooLarge {
        op: &'static str,
        dim: usize,
        max: usize,
    },

    #[error("matrix is not Hermitian (max deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:.3e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("matrix is not unitary (max deviation {deviation:.3e})")]
    NotUnitary { deviation: f64 },

    #[error(
        "Kraus operators are incomplete (max deviation of sum A^dag A from I: {deviation:.3e})"
    )]
    IncompleteKraus { deviation: f64 },

    #[error("invalid probability distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid ensemble: {0}")]
    InvalidEnsemble(String),

    #[error("no valid two-angle mixture: {0}")]
    NoValidMixture(String),

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("invalid observable: {0}")]
    InvalidObservable(String),

    #[error("invalid circuit: {0}")]
    InvalidCircuit(String),

    #[error("circuit width {width} exceeds the cap of {max} for {mode}; {hint}")]
    WidthCap {
        mode: &'static str,
        width: usize,
        max: usize,
        hint: &'static str,
    },

    #[error("invalid protocol parameters: {0}")]
    InvalidProtocol(String),

    #[error("decomposition failed: {0}")]
    Decomposition(String),
}

pub type Result<T> = std::result::Result<T, Error>;
