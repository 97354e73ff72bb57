use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter violates its documented domain.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("truncation order {order} too small for modulation index {index:.3} (need >= {required})")]
    InsufficientTruncation { order: usize, index: f64, required: usize },

    #[error("sampling too coarse: f_mod * dt = {ratio:.3} (must be < 0.5)")]
    Undersampled { ratio: f64 },

    #[error("integration step {step:e} s too large: rate * dt = {product:.3} exceeds 0.1")]
    StepTooLarge { step: f64, product: f64 },

    #[error("absorption window too narrow: edge optical depths {left:.4} and {right:.4} differ by more than 1%")]
    WindowTooNarrow { left: f64, right: f64 },

    #[error("only {fraction:.4} of the signal energy lies inside the transfer-function window (need >= 0.99)")]
    SpectralLeakage { fraction: f64 },

    #[error("window [{start:e}, {end:e}] s lies outside the sampled range [{t_min:e}, {t_max:e}] s")]
    WindowOutOfRange {
        start: f64,
        end: f64,
        t_min: f64,
        t_max: f64,
    },

    #[error("comb analysis needs at least 5 periods, window holds {periods:.2}")]
    TooFewPeriods { periods: f64 },

    #[error("configuration error at `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// Labels a runtime failure with the scenario stage it came from.
    pub fn in_stage(self, stage: &'static str) -> Self {
        match self {
            Error::Stage { .. } | Error::Config { .. } => self,
            other => Error::Stage {
                stage,
                source: Box::new(other),
            },
        }
    }

    /// True for failures caused by the configuration rather than the run.
    pub fn is_config(&self) -> bool {
        match self {
            Error::Config { .. } | Error::InvalidParameter { .. } => true,
            Error::Stage { source, .. } => source.is_config(),
            _ => false,
        }
    }
}
