use thiserror::Error;

/// Errors from exterior-algebra primitives.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum FormError {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("degree {degree} out of range for dimension {dim}")]
    DegreeOutOfRange { dim: usize, degree: usize },
    #[error("unsupported dimension {0} (supported: 2..=8)")]
    UnsupportedDimension(usize),
    #[error("degree mismatch: expected {expected}, got {got}")]
    DegreeMismatch { expected: usize, got: usize },
    #[error("contraction of a 0-form is undefined")]
    ContractDegreeZero,
    #[error("metric is not symmetric positive definite")]
    MetricNotSpd,
    #[error("invalid form literal: {0}")]
    InvalidLiteral(String),
}

/// Errors from volume functionals, duals, metrics and classification.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum StabilityError {
    #[error(transparent)]
    Form(#[from] FormError),
    #[error("unsupported (dim, degree) = ({0}, {1}) for this construction")]
    UnsupportedSignature(usize, usize),
    #[error("form is not stable ({0})")]
    NotStable(String),
    #[error("form is stable for a noncompact real form; no Riemannian metric ({0})")]
    OtherRealForm(String),
    #[error("almost complex structure requires tr(K²) < 0, got {0}")]
    NotComplexType(f64),
}

/// Errors from structure-level constructions (SU(3)/G₂ pairs, su(3)
/// matrices).
#[derive(Debug, Error, Clone, PartialEq)]
pub enum StructureError {
    #[error("matrix is not skew-hermitian (deviation {0:.3e})")]
    NotSkewHermitian(f64),
    #[error("matrix is not traceless (|tr| = {0:.3e})")]
    NotTraceless(f64),
    #[error("incompatible pair: {0}")]
    IncompatiblePair(String),
    #[error(transparent)]
    Stability(#[from] StabilityError),
    #[error("form error: {0}")]
    Form(#[from] FormError),
}

/// Errors from the reduced flows.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum FlowError {
    #[error("state outside coordinate domain: {0}")]
    DomainViolation(String),
    #[error("singular state: {0}")]
    Singular(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Stability(#[from] StabilityError),
}
