use thiserror::Error;

/// Errors produced by the numerical core.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("dimension {0} outside the supported range 1..=8")]
    UnsupportedDimension(usize),

    #[error("non-finite matrix entry at ({row}, {col})")]
    NonFiniteEntry { row: usize, col: usize },

    #[error("operator is not positive semidefinite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPositiveSemidefinite { min_eigenvalue: f64 },

    #[error("invalid density operator: {0}")]
    InvalidDensity(String),

    #[error("invalid pure state: {0}")]
    InvalidPureState(String),

    #[error("invalid POVM: {0}")]
    InvalidPovm(String),

    #[error("invalid Bloch vector: norm {norm}")]
    InvalidBlochVector { norm: f64 },

    #[error("model is not differentiable here: derivative trace {trace:e}")]
    NonDifferentiable { trace: f64 },

    #[error("SLD does not exist: derivative has weight {weight:e} on the kernel of the state")]
    IllPosedSld { weight: f64 },

    #[error("Fisher information is essentially singular at this point")]
    SingularFisher,

    #[error("quantum score vanishes here (degenerate curve point)")]
    DegenerateScore,

    #[error("colatitude {eta} is degenerate (pole of the sphere)")]
    PoleDegeneracy { eta: f64 },

    #[error("invalid spherical angles: {0}")]
    InvalidAngles(String),

    #[error("curve sample needs at least {needed} grid points, got {got}")]
    GridTooSmall { needed: usize, got: usize },

    #[error("invalid curve sample: {0}")]
    InvalidCurve(String),

    #[error("invalid sampling plan: {0}")]
    InvalidPlan(String),

    #[error("covariance matrix is near-singular (condition number {cond:e})")]
    NearSingularCovariance { cond: f64 },

    #[error("invalid information matrix: {0}")]
    InvalidInfoMatrix(String),

    #[error("parameter vector has length {got}, model expects {expected}")]
    BadParameterLength { expected: usize, got: usize },

    #[error("CSV parse error at line {line}: {message}")]
    CsvParse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
