use thiserror::Error;

/// Errors raised by the simulator library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error("power iteration did not converge after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("cannot extract an eigenvector from a zero matrix")]
    ZeroMatrix,

    #[error("beamformer norm is {norm}, expected a unit-norm weight vector")]
    NotUnitNorm { norm: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("drop gain map needs at least one beamformer")]
    NoBeamformers,

    #[error("sample tensor is empty")]
    EmptyTensor,

    #[error("percentile {0} is outside (0, 100)")]
    Percentile(f64),

    #[error("direction (az {azimuth}, el {elevation}) is not on the angular grid")]
    OffGrid { azimuth: f64, elevation: f64 },

    #[error("distance must be positive, got {0}")]
    NonPositiveDistance(f64),

    #[error("window {window}, drop {drop}: {source}")]
    Drop {
        window: usize,
        drop: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            reason: reason.into(),
        }
    }

    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
