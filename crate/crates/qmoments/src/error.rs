use crate::moments::Label;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("operators live on different Hilbert spaces")]
    SpaceMismatch,
    #[error("invalid Hilbert space: {0}")]
    InvalidSpace(String),
    #[error("operator is not Hermitian (residual {residual:.3e})")]
    NotHermitian { residual: f64 },
    #[error("state is not valid: {0}")]
    InvalidState(String),
    #[error("Pauli axis must be 1, 2 or 3, got {0}")]
    PauliAxis(usize),
    #[error("operators {0} and {1} must commute (residual {2:.3e})")]
    CommutationViolation(Label, Label, f64),
    #[error("duplicate observable label {0}")]
    DuplicateLabel(Label),
    #[error("unknown observable label {0}")]
    UnknownLabel(Label),
    #[error("matrix is not symmetric")]
    NotSymmetric,
    #[error("matrix has negative eigenvalue {0:.6e}")]
    NotPsd(f64),
    #[error("correlation matrix must be strictly positive definite (min eigenvalue {0:.6e})")]
    NotStrictlyPd(f64),
    #[error("kernel-ordered third-moment convention requires a kernel-variable designation")]
    MissingKernelVariables,
    #[error("no lambda in the search schedule yields a positive definite adjusted covariance")]
    LambdaScheduleExhausted,
    #[error("peak calibration residual {0:.3e} exceeds tolerance")]
    CalibrationResidual(f64),
    #[error("commutation graph is the 4-cycle; route through kernel reduction instead")]
    FourCycleGraph,
    #[error("commutation graph matches no factorization case: {0}")]
    UnsupportedGraph(String),
    #[error("epsilon schedule exhausted without restoring positivity")]
    EpsilonScheduleExhausted,
    #[error("iteration failed to converge: {0}")]
    NoConvergence(String),
    #[error("LHV fit failed: residual {residual:.6} on moment {tuple}")]
    FitResidual { residual: f64, tuple: String },
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Input(String),
}

pub type Result<T> = std::result::Result<T, Error>;
