use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite coordinate in point")]
    NonFiniteCoordinate,

    #[error("invalid set: {0}")]
    InvalidSet(String),

    #[error("invalid function: {0}")]
    InvalidFunction(String),

    #[error("projection has no closed form for this set: {0}")]
    UnsupportedProjection(String),

    #[error("signed distance is undefined for {0}")]
    UnsupportedSignedDistance(String),

    #[error("erosion is not supported for {0}")]
    UnsupportedErosion(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("zero subgradient at a point outside the level set")]
    ZeroSubgradientOutsideLevelSet,

    #[error("overrelaxation functional must be positive, got {0}")]
    NonpositivePhi(f64),

    #[error("weights sum to {0}, expected 1")]
    WeightSumViolation(f64),

    #[error("empty control set")]
    EmptyControlSet,

    #[error("index {index} out of range 1..={m}")]
    IndexOutOfRange { index: usize, m: usize },

    #[error("explicit schedule exhausted at k = {k} (length {len})")]
    ExplicitExhausted { k: usize, len: usize },

    #[error("explicit schedules cannot be classified")]
    UnclassifiableExplicit,

    #[error("margin violation: {0}")]
    MarginViolation(String),

    #[error("precondition violation: {}", .0.join("; "))]
    PreconditionViolation(Vec<String>),

    #[error("non-finite iterate at k = {0}")]
    NonFiniteIterate(usize),

    #[error("divergence suspected at k = {k}: |x| = {norm:e}")]
    DivergenceSuspected { k: usize, norm: f64 },

    #[error("reference point is not feasible")]
    ReferenceNotFeasible,

    #[error("oracle budget of {sweeps} sweeps exhausted (estimate {estimate:e})")]
    OracleBudgetExhausted { sweeps: usize, estimate: f64 },

    #[error("interior ball hypothesis violated: {0}")]
    HypothesisViolation(String),

    #[error("eroded set is empty")]
    EmptyErodedSet,

    #[error("Slater condition fails: f(z) = {0} >= 0")]
    SlaterViolation(f64),

    #[error("inconsistent generator spec: {0}")]
    InconsistentSpec(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("validation failed: {}", .0.join("; "))]
    Validation(Vec<String>),

    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// The variant name, for machine-readable error reporting.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::NonFiniteCoordinate => "NonFiniteCoordinate",
            Error::InvalidSet(_) => "InvalidSet",
            Error::InvalidFunction(_) => "InvalidFunction",
            Error::UnsupportedProjection(_) => "UnsupportedProjection",
            Error::UnsupportedSignedDistance(_) => "UnsupportedSignedDistance",
            Error::UnsupportedErosion(_) => "UnsupportedErosion",
            Error::InvalidParameter(_) => "InvalidParameter",
            Error::ZeroSubgradientOutsideLevelSet => "ZeroSubgradientOutsideLevelSet",
            Error::NonpositivePhi(_) => "NonpositivePhi",
            Error::WeightSumViolation(_) => "WeightSumViolation",
            Error::EmptyControlSet => "EmptyControlSet",
            Error::IndexOutOfRange { .. } => "IndexOutOfRange",
            Error::ExplicitExhausted { .. } => "ExplicitExhausted",
            Error::UnclassifiableExplicit => "UnclassifiableExplicit",
            Error::MarginViolation(_) => "MarginViolation",
            Error::PreconditionViolation(_) => "PreconditionViolation",
            Error::NonFiniteIterate(_) => "NonFiniteIterate",
            Error::DivergenceSuspected { .. } => "DivergenceSuspected",
            Error::ReferenceNotFeasible => "ReferenceNotFeasible",
            Error::OracleBudgetExhausted { .. } => "OracleBudgetExhausted",
            Error::HypothesisViolation(_) => "HypothesisViolation",
            Error::EmptyErodedSet => "EmptyErodedSet",
            Error::SlaterViolation(_) => "SlaterViolation",
            Error::InconsistentSpec(_) => "InconsistentSpec",
            Error::Parse(_) => "ParseError",
            Error::Validation(_) => "ValidationError",
            Error::Io { .. } => "IoError",
        }
    }
}
