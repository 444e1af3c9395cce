//! Crate-wide error and warning types.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by the numerical kernels and the decomposition pipelines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: {context}")]
    DimensionMismatch { context: String },

    #[error("non-finite value encountered: {context}")]
    NonFinite { context: String },

    #[error("invalid argument: {context}")]
    InvalidArgument { context: String },

    #[error("insufficient samples: index {required_index} is required but only {available} samples are available")]
    InsufficientSamples {
        required_index: usize,
        available: usize,
    },

    #[error("degenerate simplexes: reference volume magnitude {magnitude:.3e} is below the zero threshold {threshold:.3e} (model order overestimated or common ratios coincide)")]
    DegenerateSimplex { magnitude: f64, threshold: f64 },

    #[error("model-order detection failed: no candidate order up to {k_max} produces a non-zero geometric volume series (noisy samples, duplicate ratios, or too few samples)")]
    DetectionFailure { k_max: usize },

    #[error("similarity scan infeasible: fewer than two candidate quotient vectors exist")]
    SimilarityInfeasible,

    #[error("leading polynomial coefficient is zero (degree {degree})")]
    ZeroLeadingCoefficient { degree: usize },

    #[error("polynomial root residual {residual:.3e} exceeds tolerance {tolerance:.3e}")]
    RootResidual { residual: f64, tolerance: f64 },

    #[error("decomposition is inconsistent with its input: round-trip residual {residual:.3e} exceeds {limit:.3e}")]
    InconsistentDecomposition { residual: f64, limit: f64 },

    #[error("parse error: {context}")]
    Parse { context: String },
}

impl Error {
    pub(crate) fn dim(context: impl Into<String>) -> Self {
        Error::DimensionMismatch {
            context: context.into(),
        }
    }

    pub(crate) fn invalid(context: impl Into<String>) -> Self {
        Error::InvalidArgument {
            context: context.into(),
        }
    }

    pub(crate) fn non_finite(context: impl Into<String>) -> Self {
        Error::NonFinite {
            context: context.into(),
        }
    }

    pub(crate) fn parse(context: impl Into<String>) -> Self {
        Error::Parse {
            context: context.into(),
        }
    }
}

/// Non-fatal conditions surfaced alongside results of the pipelines.
#[derive(Debug, Clone, PartialEq)]
pub enum Warning {
    /// Two recovered common ratios are closer than the stated relative gap.
    NearDuplicateRatios { gap: f64 },
    /// The ratio matrix is ill-conditioned; initial terms were recovered with
    /// a regularized pseudo-inverse.
    IllConditionedRatioMatrix { condition: f64 },
}

impl std::fmt::Display for Warning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Warning::NearDuplicateRatios { gap } => {
                write!(f, "common ratios nearly coincide (relative gap {gap:.3e})")
            }
            Warning::IllConditionedRatioMatrix { condition } => {
                write!(
                    f,
                    "ratio matrix is ill-conditioned (condition estimate {condition:.3e}); \
                     initial terms recovered with a regularized pseudo-inverse"
                )
            }
        }
    }
}
