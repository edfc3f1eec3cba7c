use thiserror::Error;

/// Every failure the numerical pipeline can report.
///
/// Variants carrying a parameter value `t` name the first grid point where
/// the condition was detected.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum JacobiError {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),
    #[error("subspace is not in the chart (singular X block, condition {cond:.3e})")]
    NotInChart { cond: f64 },
    #[error("subspaces are not transverse (singular difference, condition {cond:.3e})")]
    NotTransverse { cond: f64 },
    #[error("basis matrix is singular")]
    InvalidBasis,
    #[error("transform is not (conformal) symplectic: residual {residual:.3e}")]
    InvalidTransform { residual: f64 },
    #[error("regularity failure at t = {t}: S' is singular")]
    RegularityFailure { t: f64 },
    #[error("parameter {t} outside curve domain [{lo}, {hi}]")]
    DomainError { t: f64, lo: f64, hi: f64 },
    #[error("too few samples: got {got}, need at least {need}")]
    TooFewSamples { got: usize, need: usize },
    #[error("singular change of parameter (first derivative vanishes)")]
    SingularParameter,
    #[error("complex eigenvalues at t = {t} (imaginary part {imag:.3e})")]
    ComplexEigenvalues { t: f64, imag: f64 },
    #[error("repeated eigenvalues at t = {t} (relative gap {gap:.3e})")]
    RepeatedEigenvalues { t: f64, gap: f64 },
    #[error("monotonicity failure at t = {t}: S' is not definite")]
    MonotonicityFailure { t: f64 },
    #[error("inflection point at t = {t}: derivative curve leaves the chart")]
    InflectionPoint { t: f64 },
    #[error("curve not admissible at t = {t}: |det(R - Ric/n Id)| = {det:.3e}")]
    NotAdmissible { t: f64, det: f64 },
    #[error("normalization violated at t = {t}: prod |k_i - kbar| = {value}")]
    NormalizationViolation { t: f64, value: f64 },
    #[error("eigenvalue crossing between samples near t = {t}")]
    EigenCrossing { t: f64 },
    #[error("Cartan matrix structure violated at t = {t}: {what} (deviation {deviation:.3e})")]
    StructureViolation { t: f64, what: &'static str, deviation: f64 },
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("symplecticity lost at tau = {t}: residual {residual:.3e}")]
    SymplecticityLoss { t: f64, residual: f64 },
    #[error("line direction is zero")]
    ZeroDirection,
    #[error("no Moebius fit: residual {residual:.3e}")]
    NoFit { residual: f64 },
    #[error("points {i} and {j} are not in general position")]
    NotGeneralPosition { i: usize, j: usize },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl JacobiError {
    /// Short machine-readable tag used in CLI error JSON.
    pub fn kind(&self) -> &'static str {
        match self {
            JacobiError::InvalidDimension(_) => "InvalidDimension",
            JacobiError::NotInChart { .. } => "NotInChart",
            JacobiError::NotTransverse { .. } => "NotTransverse",
            JacobiError::InvalidBasis => "InvalidBasis",
            JacobiError::InvalidTransform { .. } => "InvalidTransform",
            JacobiError::RegularityFailure { .. } => "RegularityFailure",
            JacobiError::DomainError { .. } => "DomainError",
            JacobiError::TooFewSamples { .. } => "TooFewSamples",
            JacobiError::SingularParameter => "SingularParameter",
            JacobiError::ComplexEigenvalues { .. } => "ComplexEigenvalues",
            JacobiError::RepeatedEigenvalues { .. } => "RepeatedEigenvalues",
            JacobiError::MonotonicityFailure { .. } => "MonotonicityFailure",
            JacobiError::InflectionPoint { .. } => "InflectionPoint",
            JacobiError::NotAdmissible { .. } => "NotAdmissible",
            JacobiError::NormalizationViolation { .. } => "NormalizationViolation",
            JacobiError::EigenCrossing { .. } => "EigenCrossing",
            JacobiError::StructureViolation { .. } => "StructureViolation",
            JacobiError::GridMismatch(_) => "GridMismatch",
            JacobiError::SymplecticityLoss { .. } => "SymplecticityLoss",
            JacobiError::ZeroDirection => "ZeroDirection",
            JacobiError::NoFit { .. } => "NoFit",
            JacobiError::NotGeneralPosition { .. } => "NotGeneralPosition",
            JacobiError::InvalidInput(_) => "InvalidInput",
        }
    }
}

pub type Result<T> = std::result::Result<T, JacobiError>;
