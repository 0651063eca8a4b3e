use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum BanditError {
    /// A parameter or input value is outside its valid range.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    /// A reward fell outside the `[0, 1]` reward range.
    #[error("reward {0} is outside [0, 1]")]
    RewardOutOfRange(f64),

    /// A statistic was requested for an arm that has no observations.
    #[error("statistic `{0}` is undefined for an arm with no observations")]
    UndefinedStatistic(&'static str),

    /// Rejection sampling hit its retry cap; the acceptance region has almost no mass.
    #[error("rejection sampling exceeded {0} retries; the truncated mixture is degenerate")]
    DegenerateMixture(u64),

    /// Problem or policy configuration is inconsistent.
    #[error("configuration error: {0}")]
    Config(String),

    /// Ledgers or curves with different horizons were combined.
    #[error("horizon mismatch: expected {expected}, found {found}")]
    HorizonMismatch { expected: usize, found: usize },

    /// A bound or check needs the lower-bound constant `A`, which is not known for this arm.
    #[error("the density lower-bound constant A is not known for this distribution")]
    LowerBoundUnavailable,

    /// A margin that must be strictly positive was zero or negative.
    #[error("margin must be strictly positive, got {0}")]
    NonPositiveMargin(f64),

    /// Writing results failed.
    #[error("i/o error: {0}")]
    Io(String),
}

impl BanditError {
    /// True for errors caused by bad input rather than by a failure while running.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            BanditError::InvalidParameter { .. }
                | BanditError::Config(_)
                | BanditError::LowerBoundUnavailable
                | BanditError::NonPositiveMargin(_)
        )
    }

    pub(crate) fn invalid(name: &str, reason: impl Into<String>) -> Self {
        BanditError::InvalidParameter {
            name: name.to_string(),
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, BanditError>;
