use thiserror::Error;

/// Everything that can go wrong while building, simulating or auditing a model.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An integral that must be finite is infinite (or exceeds the divergence cutoff).
    #[error("divergent integral: {0}")]
    Divergent(String),

    #[error("stability index {0} outside (1, 2)")]
    InvalidAlpha(f64),

    #[error("measure has no mass above cutoff {0}")]
    EmptyTail(f64),

    #[error("state rate {rate} exceeds dominating rate {dominator}")]
    RateExceedsDominator { rate: f64, dominator: f64 },

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),

    #[error("coupled simulation requires monotone jump intensities")]
    MonotonicityUnverified,

    #[error("quadrature failed to converge on [{lo}, {hi}]")]
    QuadratureFailure { lo: f64, hi: f64 },

    #[error("modulus fails the divergence criterion: {0}")]
    NonOsgood(String),

    #[error("{0}")]
    Io(String),
}

impl Error {
    /// True for errors that come from numerics rather than from configuration.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Divergent(_) | Error::QuadratureFailure { .. } | Error::NonOsgood(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
