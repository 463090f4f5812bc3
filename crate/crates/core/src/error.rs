use thiserror::Error;

/// Errors raised by string construction, spectral computations and inversion.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("positions and masses differ in length ({positions} vs {masses})")]
    LengthMismatch { positions: usize, masses: usize },

    #[error("position {index} violates 0 < x1 < ... < xN < 1")]
    OrderingViolation { index: usize },

    #[error("mass {index} is not strictly positive")]
    NonPositiveMass { index: usize },

    #[error("boundary parameter must be nonnegative")]
    NegativeBoundaryParameter,

    #[error("degenerate boundary conditions: {0}")]
    DegenerateBc(&'static str),

    #[error("unsupported boundary family: {0}")]
    UnsupportedBoundary(&'static str),

    #[error("root isolation could not separate eigenvalue {index}")]
    DegenerateSpectrum { index: usize },

    #[error("spectral parameter is a pole of the Weyl function")]
    PoleAtZ,

    #[error("beta vanishes at the sampled spectral parameter")]
    BetaZero,

    #[error("not a Stieltjes continued fraction: {0}")]
    NotAStieltjesFraction(String),

    #[error("recovered interior lengths sum to {0} >= 1")]
    LengthOverflow(f64),

    #[error("point {0} lies outside the open interval (0, 1)")]
    DomainError(f64),

    #[error("invalid flow specification: {0}")]
    InvalidFlow(&'static str),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
