use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Threshold rules are undefined for `τ₀ = τ₁` (and `τ₀ = 0` for counts).
    #[error("degenerate channels: {0}")]
    DegenerateChannels(String),

    #[error("both likelihoods vanish at (n_s={n_s}, n_i={n_i})")]
    ModelEvaluation { n_s: f64, n_i: f64 },

    #[error("model used outside its validity regime: {0}")]
    InvalidRegime(String),

    #[error("runtime guard: {0}")]
    RuntimeGuard(String),

    #[error("mean idler count is not positive")]
    EmptyIdler,

    #[error("division outside domain: {0}")]
    DivisionDomain(String),

    #[error("frame set contains records without a truth label")]
    UnlabeledData,

    #[error("malformed frame data at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short machine-readable tag, used by front ends for error prefixes.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidParameter(_) => "invalid-parameter",
            Error::DegenerateChannels(_) => "degenerate-channels",
            Error::ModelEvaluation { .. } => "model-evaluation",
            Error::InvalidRegime(_) => "invalid-regime",
            Error::RuntimeGuard(_) => "runtime-guard",
            Error::EmptyIdler => "empty-idler",
            Error::DivisionDomain(_) => "division-domain",
            Error::UnlabeledData => "unlabeled-data",
            Error::Parse { .. } => "parse",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }

    /// True for errors caused by bad input rather than by a failing run.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter(_)
                | Error::DegenerateChannels(_)
                | Error::InvalidRegime(_)
                | Error::Parse { .. }
                | Error::UnlabeledData
        )
    }
}

pub(crate) fn check_unit_interval(name: &str, value: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&value) {
        return Err(Error::InvalidParameter(format!(
            "{name} must lie in [0, 1], got {value}"
        )));
    }
    Ok(())
}

pub(crate) fn check_non_negative(name: &str, value: f64) -> Result<()> {
    if !(value >= 0.0) || !value.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "{name} must be finite and non-negative, got {value}"
        )));
    }
    Ok(())
}
