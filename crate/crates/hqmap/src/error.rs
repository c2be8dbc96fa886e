use thiserror::Error;

/// Exit status for domain errors such as a map outside F² or an
/// unclassifiable normal form.
pub const EXIT_DOMAIN: i32 = 1;
/// Exit status for bad arguments, unreadable inputs and malformed files.
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Domain(#[from] hqmap_core::Error),
    #[error("usage: {0}")]
    Usage(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("config: {0}")]
    Toml(#[from] toml::de::Error),
    /// One or more acceptance criteria failed.
    #[error("{0} acceptance criteria failed")]
    Verification(usize),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Domain(hqmap_core::Error::InvalidInput(_)) => EXIT_USAGE,
            CliError::Domain(_) | CliError::Verification(_) => EXIT_DOMAIN,
            _ => EXIT_USAGE,
        }
    }
}
