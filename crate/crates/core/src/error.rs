use thiserror::Error;

/// Errors produced anywhere in the assessment pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: line {line}: {message}")]
    Parse {
        path: String,
        line: u64,
        message: String,
    },

    #[error("validation failed for {context}: {message}")]
    Validation { context: String, message: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("degenerate covariance: determinant {det:e} below threshold")]
    DegenerateCovariance { det: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("box contains no positive semi-definite covariance")]
    InfeasibleBox,

    #[error("mixture fit failed, best residual {residual:e}")]
    FitFailure { residual: f64 },

    #[error("weight law is identically zero (B = C = 0)")]
    DegenerateLaw,

    #[error("inconsistent evidence: {0}")]
    Consistency(String),

    #[error("internal error: {0}")]
    Internal(String),

    #[error("prefix {index}: {source}")]
    Prefix {
        index: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn validation(context: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            context: context.into(),
            message: message.into(),
        }
    }

    /// True for failures of the numerical machinery as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::Parse { .. }
            | Error::Validation { .. }
            | Error::Io { .. }
            | Error::Config(_) => false,
            Error::Prefix { source, .. } => source.is_numerical(),
            _ => true,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
