use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("matrix is not Hermitian (max deviation {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("matrix is not unitary (max deviation {deviation:e})")]
    NotUnitary { deviation: f64 },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid projector family: {0}")]
    InvalidFamily(String),

    #[error("invalid time grid: {0}")]
    InvalidGrid(String),

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("invalid history: {0}")]
    InvalidHistory(String),

    #[error("candidate probability {value} outside [0, 1]; model invariants are broken")]
    ProbabilityOutOfRange { value: f64 },

    #[error("degenerate normalization: Tr(rho_f rho_i) = {value:e}")]
    DegenerateNormalization { value: f64 },

    #[error("decoherence condition not satisfied: {0}")]
    ConditionNotSatisfied(String),

    #[error("state is not pure")]
    MixedState,

    #[error("impossible pre/post-selection pair (denominator {value:e})")]
    ImpossibleSelection { value: f64 },

    #[error("scenario precondition failed: {0}")]
    Scenario(String),
}

pub type Result<T> = std::result::Result<T, Error>;
