use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{n} spins exceeds the dimension cap of {cap}")]
    DimensionCap { n: usize, cap: usize },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid spin system: {0}")]
    InvalidSystem(String),

    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("operator is not unitary (||U^dagger U - I||_F = {0:e})")]
    NotUnitary(f64),

    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),

    #[error("method needs at least 2 spins (got {0})")]
    TooFewSpins(usize),

    #[error("invalid circuit: {0}")]
    InvalidCircuit(String),

    #[error("invalid pulse: {0}")]
    InvalidPulse(String),

    #[error("unknown built-in sequence `{0}`")]
    UnknownSequence(String),

    #[error("spins {0} and {1} are not coupled")]
    ZeroCoupling(usize, usize),

    #[error("symbolic delay 1/2J needs a coupled pair")]
    UnboundDelay,

    #[error("unsupported gate for pulse lowering: {0}")]
    UnsupportedGate(String),

    #[error("{realization} realization unavailable for {n} spins")]
    RealizationUnavailable { realization: String, n: usize },

    #[error("invalid spectral parameters: {0}")]
    InvalidSpectral(String),

    #[error("unsupported tomography size: {0} spins")]
    UnsupportedTomography(usize),

    #[error("invalid pulse set: {0}")]
    InvalidPulseSet(String),

    #[error("design matrix rank {rank} < {expected}; unresolved coefficients: {}", unresolved.join(", "))]
    RankDeficient {
        rank: usize,
        expected: usize,
        unresolved: Vec<String>,
    },

    #[error("fidelity undefined for a zero-norm argument")]
    ZeroNorm,

    #[error("molecule file line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
