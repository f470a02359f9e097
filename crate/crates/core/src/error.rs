use thiserror::Error;

pub type Result<T> = std::result::Result<T, TodaError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TodaError {
    #[error("matrix is singular to working precision")]
    Singular,
    /// 1-based index of the first leading principal minor that vanishes.
    #[error("leading principal minor {0} vanishes")]
    MinorVanishes(usize),
    #[error("matrix is not upper triangular with positive real diagonal")]
    NotInU,
    #[error("spectrum does not match the chart center (worst mismatch {worst:.3e})")]
    SpectrumMismatch { worst: f64 },
    #[error("spectrum is not simple")]
    NotSimpleSpectrum,
    #[error("iteration failed to converge")]
    ConvergenceFailure,
    #[error("matrix is not in the algebra of the context")]
    NotInAlgebra,
    /// 1-based index of the offending minor of the unitary cell factor.
    #[error("point lies on the chart boundary (minor {minor} vanishes)")]
    ChartBoundary { minor: usize },
    #[error("step size underflow at t = {t} (h = {h:.3e})")]
    StepFailure { t: f64, h: f64 },
    #[error("factorization is too ill-conditioned (discrepancy {discrepancy:.3e})")]
    ConditioningExceeded { discrepancy: f64 },
    #[error("matrix is not in the real form")]
    NotInForm,
    #[error("invalid signature ({p}, {q}): need p >= q >= 1")]
    BadSignature { p: usize, q: usize },
    #[error("chart structure violated (residual {residual:.3e})")]
    StructureViolation { residual: f64 },
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl TodaError {
    /// Short machine-readable name, e.g. `MinorVanishes(1)`.
    pub fn name(&self) -> String {
        match self {
            TodaError::Singular => "Singular".into(),
            TodaError::MinorVanishes(j) => format!("MinorVanishes({j})"),
            TodaError::NotInU => "NotInU".into(),
            TodaError::SpectrumMismatch { .. } => "SpectrumMismatch".into(),
            TodaError::NotSimpleSpectrum => "NotSimpleSpectrum".into(),
            TodaError::ConvergenceFailure => "ConvergenceFailure".into(),
            TodaError::NotInAlgebra => "NotInAlgebra".into(),
            TodaError::ChartBoundary { minor } => format!("ChartBoundary({minor})"),
            TodaError::StepFailure { .. } => "StepFailure".into(),
            TodaError::ConditioningExceeded { .. } => "ConditioningExceeded".into(),
            TodaError::NotInForm => "NotInForm".into(),
            TodaError::BadSignature { .. } => "BadSignature".into(),
            TodaError::StructureViolation { .. } => "StructureViolation".into(),
            TodaError::DimensionMismatch { .. } => "DimensionMismatch".into(),
            TodaError::InvalidInput(_) => "InvalidInput".into(),
        }
    }
}
