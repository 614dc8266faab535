use thiserror::Error;

pub type Result<T> = std::result::Result<T, VbError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VbError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite value in {what} at index {index}")]
    NonFinite { what: &'static str, index: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("value {value} outside the domain of {what}")]
    Domain { what: &'static str, value: f64 },

    #[error("objective returned a non-finite value at x = {x}")]
    NonFiniteObjective { x: f64 },

    #[error("coordinate {index}: {source}")]
    Coordinate {
        index: usize,
        #[source]
        source: Box<VbError>,
    },

    #[error("linear solve failed: {0}")]
    LinearSolve(String),

    #[error("zero column {0} in design matrix")]
    ZeroColumn(usize),

    #[error("subset enumeration needs {needed} subsets, above the cap of {cap}; use a smaller s")]
    EnumerationCap { needed: u128, cap: u128 },

    #[error("saturated ridge fit (df = {df:.6} >= n = {n}); supply a known or plug-in noise level")]
    SaturatedFit { df: f64, n: usize },

    #[error("replicate {replicate}: {source}")]
    Replicate {
        replicate: usize,
        #[source]
        source: Box<VbError>,
    },

    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

impl VbError {
    pub(crate) fn at_coordinate(self, index: usize) -> Self {
        VbError::Coordinate {
            index,
            source: Box::new(self),
        }
    }

    /// True for failures caused by the caller's input rather than by the numerics.
    pub fn is_input_error(&self) -> bool {
        match self {
            VbError::DimensionMismatch(_)
            | VbError::NonFinite { .. }
            | VbError::InvalidParameter(_)
            | VbError::Domain { .. }
            | VbError::ZeroColumn(_)
            | VbError::EnumerationCap { .. }
            | VbError::SaturatedFit { .. } => true,
            VbError::Coordinate { source, .. } | VbError::Replicate { source, .. } => {
                source.is_input_error()
            }
            _ => false,
        }
    }
}
