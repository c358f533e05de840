use thiserror::Error;

/// Errors raised by the geometry, model, channel, and probe operations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("sample space must have at least 2 points, got {0}")]
    SpaceTooSmall(usize),

    #[error("size mismatch: expected {expected}, got {actual}")]
    SizeMismatch { expected: usize, actual: usize },

    #[error("weight {value} at index {index} is not strictly positive")]
    NonPositiveWeight { index: usize, value: f64 },

    #[error("weights sum to {0}, not 1")]
    NotNormalized(f64),

    #[error("non-finite value at index {0}")]
    NonFinite(usize),

    #[error("positivity floor {floor} must lie in (0, 1/{n})")]
    BadFloor { floor: f64, n: usize },

    #[error("m-representation sums to {0}, not 0")]
    NotTangent(f64),

    #[error("random variable has mean {0} at the base point, expected 0")]
    NotCentered(f64),

    #[error("operands are based at different distributions")]
    BasePointMismatch,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("jacobian is rank deficient (singular value ratio {0:e})")]
    RankDeficient(f64),

    #[error("matrix is singular")]
    SingularMatrix,

    #[error("estimator {index} is not locally unbiased (residual {residual:e})")]
    NotLocallyUnbiased { index: usize, residual: f64 },

    #[error("map is not a surjection: codomain point {0} is never attained")]
    NotSurjective(usize),

    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    #[error("sizes must be at least 2, got ({0}, {1})")]
    BadSize(usize, usize),

    #[error("distribution has no common denominator <= {0}")]
    NotRational(u64),

    #[error("family expression: {0}")]
    Grammar(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Stable snake_case name of the variant, for machine-readable reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::SpaceTooSmall(_) => "space_too_small",
            Error::SizeMismatch { .. } => "size_mismatch",
            Error::NonPositiveWeight { .. } => "non_positive_weight",
            Error::NotNormalized(_) => "not_normalized",
            Error::NonFinite(_) => "non_finite",
            Error::BadFloor { .. } => "bad_floor",
            Error::NotTangent(_) => "not_tangent",
            Error::NotCentered(_) => "not_centered",
            Error::BasePointMismatch => "base_point_mismatch",
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::RankDeficient(_) => "rank_deficient",
            Error::SingularMatrix => "singular_matrix",
            Error::NotLocallyUnbiased { .. } => "not_locally_unbiased",
            Error::NotSurjective(_) => "not_surjective",
            Error::InvalidChannel(_) => "invalid_channel",
            Error::BadSize(..) => "bad_size",
            Error::NotRational(_) => "not_rational",
            Error::Grammar(_) => "grammar",
        }
    }
}
