use crate::config::ConfigError;

/// Failures of a command, each with its process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Usage(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    Breakdown(String),
    #[error(transparent)]
    Numeric(isostring::Error),
    #[error("{failed} of {total} properties failed")]
    VerifyFailed { failed: usize, total: usize },
}

impl From<isostring::Error> for CliError {
    fn from(e: isostring::Error) -> Self {
        use isostring::Error as E;
        match e {
            E::NotAStieltjesFraction(_)
            | E::LengthOverflow(_)
            | E::OrderingViolation { .. }
            | E::NonPositiveMass { .. } => Self::Breakdown(e.to_string()),
            E::UnsupportedBoundary(_)
            | E::DegenerateBc(_)
            | E::InvalidFlow(_)
            | E::NegativeBoundaryParameter
            | E::LengthMismatch { .. } => Self::Config(ConfigError::Invalid(e.to_string())),
            _ => Self::Numeric(e),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::VerifyFailed { .. } => 1,
            Self::Config(_) | Self::Usage(_) | Self::Io(_) | Self::Csv(_) => 2,
            Self::Breakdown(_) => 3,
            Self::Numeric(_) => 4,
        }
    }
}
