use thiserror::Error;

/// Errors raised by the numerical modules and the experiment runner.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed arguments: dimension mismatch, bad ordering, out-of-range values.
    #[error("argument error: {0}")]
    Argument(String),

    /// The Hurst functional left (0, 1) or violated its declared bounds.
    #[error("model error: {0}")]
    Model(String),

    /// Adaptive quadrature did not converge within the panel budget.
    #[error("quadrature error: {message} (worst panel [{panel_lo:e}, {panel_hi:e}], error estimate {panel_error:e})")]
    Quadrature {
        message: String,
        panel_lo: f64,
        panel_hi: f64,
        panel_error: f64,
    },

    /// A covariance matrix could not be factorised, even after the jitter ladder.
    #[error("conditioning error: {0}")]
    Conditioning(String),

    /// A numerical identity that must hold by construction was violated.
    #[error("internal consistency error: {0}")]
    InternalConsistency(String),

    /// A request exceeds a configured size cap.
    #[error("size error: {0}")]
    Size(String),

    /// Sampler or estimator configuration is unusable.
    #[error("configuration error: {0}")]
    Configuration(String),

    /// Binary or CSV artifact does not match the expected layout.
    #[error("format error: {0}")]
    Format(String),

    /// Manifest failed to parse or validate.
    #[error("manifest error: {0}")]
    Manifest(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    /// True for errors caused by user input rather than by the numerics.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Argument(_) | Error::Model(_) | Error::Manifest(_) | Error::Configuration(_) | Error::Size(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
