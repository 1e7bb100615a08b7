use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("singular value decomposition did not converge for a {rows}x{cols} matrix")]
    SvdNonConvergence { rows: usize, cols: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("invalid product: {0}")]
    InvalidProduct(String),

    #[error("invalid size parameter: {0}")]
    InvalidSize(String),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("target state is the zero vector")]
    ZeroTarget,

    #[error("wrong product family: expected {expected}")]
    WrongFamily { expected: &'static str },

    #[error("target does not reshape to a symmetric matrix (max deviation {0:e})")]
    AsymmetricTarget(f64),

    #[error("invalid ensemble: {0}")]
    InvalidEnsemble(String),

    #[error("product vector of ensemble item {0} is zero")]
    ZeroProductVector(usize),

    #[error("non-injective universal map (numerical rank {rank} < {domain})")]
    NonInjective { rank: usize, domain: usize },

    #[error("invalid density matrix: {0}")]
    InvalidDensity(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),

    #[error("invalid override: {0}")]
    InvalidOverride(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
