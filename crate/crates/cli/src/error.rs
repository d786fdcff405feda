use borel_ns_core::Error as CoreError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical abort: {0}")]
    Numerical(String),
    #[error("certificate refused: {0}")]
    Refused(String),
    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed file {path}: {reason}")]
    Format { path: String, reason: String },
}

impl CliError {
    /// 0 success, 2 configuration, 3 numerical abort, 4 certificate refused.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io { .. } | CliError::Format { .. } => 2,
            CliError::Numerical(_) => 3,
            CliError::Refused(_) => 4,
        }
    }

    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.display().to_string(), source }
    }
}

/// Core errors outside the certificate pipeline: a refusal there is a
/// numerical limit (for example `t` beyond the admissible range).
impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::Config(_) | CoreError::GridMismatch(_) => CliError::Config(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

/// Core errors inside `certify`, where a refusal is a refused certificate.
pub fn certificate_error(e: CoreError) -> CliError {
    match e {
        CoreError::Refused(_) => CliError::Refused(e.to_string()),
        other => other.into(),
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
