use alloc::string::String;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("axis is not a unit vector (norm {norm})")]
    NonUnitAxis { norm: f64 },
    #[error("expected {expected} parameters, got {got}")]
    ParamLength { expected: usize, got: usize },
    #[error("invalid ansatz: {0}")]
    InvalidAnsatz(String),
    #[error("qubit count mismatch: {left} vs {right}")]
    QubitMismatch { left: usize, right: usize },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("quadrature order must be at least 1")]
    EmptyQuadrature,
    #[error("prior standard deviation must be positive, got {0}")]
    InvalidPrior(f64),
    #[error("averaged second moment {0:e} is too small to fix the estimator constant")]
    DegenerateSecondMoment(f64),
    #[error("the collective engine cannot simulate noise")]
    NoiseUnsupported,
    #[error("correlation matrix is not positive semidefinite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPositiveSemidefinite { min_eigenvalue: f64 },
    #[error("dephasing strength {0} outside [0, 1/2]")]
    InvalidDephasing(f64),
    #[error("not a density matrix: {0}")]
    NotDensity(String),
    #[error("unsupported gate for this operation: {0}")]
    UnsupportedGate(String),
    #[error("objective returned a non-finite value {value} at evaluation {evaluation}")]
    NonFinite { value: f64, evaluation: usize },
    #[error("bond-dimension budget exceeded during {stage}: need {required}, budget {budget}")]
    BondBudget {
        stage: String,
        required: usize,
        budget: usize,
    },
    #[error("incompatible ansatz specs: {0}")]
    IncompatibleSpecs(String),
    #[error("incomplete coefficient table: expected {expected} entries, got {got}")]
    IncompleteTable { expected: usize, got: usize },
}

pub type Result<T> = core::result::Result<T, Error>;
