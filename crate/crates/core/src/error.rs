use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid basis label `{0}`")]
    InvalidLabel(String),

    #[error("invalid site selection: {0}")]
    InvalidSites(String),

    #[error("outcome has {found} symbols but {expected} sites are measured")]
    OutcomeLength { expected: usize, found: usize },

    #[error("state has zero norm")]
    ZeroNorm,

    #[error("operator is not hermitian (residual {0:e})")]
    NotHermitian(f64),

    #[error("invalid density matrix: {0}")]
    InvalidDensity(String),

    #[error("invalid atom parameters: {0}")]
    InvalidParams(String),

    #[error("effective model requires omega_a = omega_b and delta_a = delta_b")]
    AsymmetricParams,

    #[error("input has weight {0:e} outside the computational pair subspace")]
    OutsideComputational(f64),

    #[error("step budget must be at least one")]
    ZeroSteps,

    #[error("{sites} sites exceed the dense register cap of {cap}")]
    SizeCap { sites: usize, cap: usize },

    #[error("fusion setup: {0}")]
    Fusion(String),

    #[error("branch `{0}` has no correction")]
    NotCorrectable(String),
}
