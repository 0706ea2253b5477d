use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum CbdError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("insufficient sample: need at least {needed} observations, got {got}")]
    InsufficientSample { needed: usize, got: usize },
    #[error("degenerate scale: {0}")]
    DegenerateScale(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("unknown scenario `{0}`")]
    InvalidScenario(String),
    #[error("schema error: {0}")]
    Schema(String),
    #[error("io error: {0}")]
    Io(String),
    #[error("trial {trial} (seed {seed}) failed: {source}")]
    Trial {
        trial: usize,
        seed: u64,
        #[source]
        source: Box<CbdError>,
    },
}

/// Coarse error classes, used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Usage,
    Data,
    Numeric,
}

impl CbdError {
    pub fn class(&self) -> ErrorClass {
        match self {
            CbdError::InvalidParameter { .. }
            | CbdError::InvalidScenario(_)
            | CbdError::Precondition(_) => ErrorClass::Usage,
            CbdError::InvalidInput(_)
            | CbdError::InsufficientSample { .. }
            | CbdError::Schema(_)
            | CbdError::Io(_) => ErrorClass::Data,
            CbdError::DegenerateScale(_) | CbdError::InvalidModel(_) => ErrorClass::Numeric,
            CbdError::Trial { source, .. } => source.class(),
        }
    }

    /// Short machine-readable tag.
    pub fn kind(&self) -> &'static str {
        match self {
            CbdError::InvalidInput(_) => "invalid_input",
            CbdError::InvalidParameter { .. } => "invalid_parameter",
            CbdError::InsufficientSample { .. } => "insufficient_sample",
            CbdError::DegenerateScale(_) => "degenerate_scale",
            CbdError::Precondition(_) => "precondition",
            CbdError::InvalidModel(_) => "invalid_model",
            CbdError::InvalidScenario(_) => "invalid_scenario",
            CbdError::Schema(_) => "schema",
            CbdError::Io(_) => "io",
            CbdError::Trial { .. } => "trial_failed",
        }
    }

    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        CbdError::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

impl From<std::io::Error> for CbdError {
    fn from(e: std::io::Error) -> Self {
        CbdError::Io(e.to_string())
    }
}

impl From<csv::Error> for CbdError {
    fn from(e: csv::Error) -> Self {
        match e.kind() {
            csv::ErrorKind::Io(_) => CbdError::Io(e.to_string()),
            _ => CbdError::Schema(e.to_string()),
        }
    }
}

pub type Result<T> = std::result::Result<T, CbdError>;
