use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot parse config: {0}")]
    Parse(String),

    #[error("invalid config field `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("cannot build problem: {0}")]
    Model(#[from] trajopt_core::Error),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        CliError::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// Process exit code: 1 for anything wrong with the configuration, 3 for
    /// failures while producing results.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Parse(_) | CliError::Config { .. } | CliError::Model(_) => 1,
            CliError::Io(_) | CliError::Csv(_) => 3,
        }
    }
}
