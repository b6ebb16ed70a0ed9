use alloc::string::String;

use crate::types::QualityClass;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("probability component {index} is negative ({value})")]
    NegativeProbability { index: usize, value: f64 },
    #[error("probability component {index} is not finite")]
    NonFiniteProbability { index: usize },
    #[error("probabilities sum to {sum}, outside tolerance of 1")]
    SumOutOfTolerance { sum: f64 },
    #[error("unknown quality label {0:?}")]
    UnknownLabel(String),
    #[error("instance weight must be positive and finite, got {0}")]
    InvalidWeight(f64),
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("need at least two distinct labels, found {0}")]
    TooFewClasses(usize),
    #[error("sample count for {0} is zero")]
    ZeroSampleClass(QualityClass),
    #[error("population count for {0} is zero")]
    ZeroPopulationClass(QualityClass),
    #[error("population counts are all zero")]
    EmptyPopulation,
    #[error("no positive weight for label {0}")]
    UncoveredLabel(QualityClass),
    #[error("fewer than two distinct probability vectors")]
    DegenerateData,
    #[error("non-finite input")]
    NonFiniteInput,
    #[error("likelihood evaluated to a non-finite value")]
    NonFiniteLikelihood,
    #[error("coefficient {index} is {value} on the standardized scale; outcome classes look separable")]
    SeparationDetected { index: usize, value: f64 },
    #[error("thresholds must be finite and strictly increasing")]
    InvalidThresholds,
    #[error("covariance is not positive semidefinite (min eigenvalue {0})")]
    CovarianceNotPsd(f64),
    #[error("Hessian at the optimum is singular or indefinite")]
    SingularHessian,
    #[error("at least two distinct values are required to normalize")]
    DegenerateRange,
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("input has no variation")]
    ConstantInput,
    #[error("need at least {needed} values, got {got}")]
    TooShort { needed: usize, got: usize },
    #[error("invalid generator setting: {0}")]
    InvalidSpec(&'static str),
    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),
}

impl Error {
    /// Stable identifier used in machine-readable error lines.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::NegativeProbability { .. } => "NegativeProbability",
            Error::NonFiniteProbability { .. } => "NonFiniteProbability",
            Error::SumOutOfTolerance { .. } => "SumOutOfTolerance",
            Error::UnknownLabel(_) => "UnknownLabel",
            Error::InvalidWeight(_) => "InvalidWeight",
            Error::EmptyDataset => "EmptyDataset",
            Error::TooFewClasses(_) => "TooFewClasses",
            Error::ZeroSampleClass(_) => "ZeroSampleClass",
            Error::ZeroPopulationClass(_) => "ZeroPopulationClass",
            Error::EmptyPopulation => "EmptyPopulation",
            Error::UncoveredLabel(_) => "UncoveredLabel",
            Error::DegenerateData => "DegenerateData",
            Error::NonFiniteInput => "NonFiniteInput",
            Error::NonFiniteLikelihood => "NonFiniteLikelihood",
            Error::SeparationDetected { .. } => "SeparationDetected",
            Error::InvalidThresholds => "InvalidThresholds",
            Error::CovarianceNotPsd(_) => "CovarianceNotPSD",
            Error::SingularHessian => "SingularHessian",
            Error::DegenerateRange => "DegenerateRange",
            Error::LengthMismatch { .. } => "LengthMismatch",
            Error::ConstantInput => "ConstantInput",
            Error::TooShort { .. } => "TooShort",
            Error::InvalidSpec(_) => "InvalidSpec",
            Error::InvalidArgument(_) => "InvalidArgument",
        }
    }
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
