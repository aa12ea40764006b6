use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid scenario:\n  {}", .0.join("\n  "))]
    Invalid(Vec<String>),

    #[error("unknown preset '{0}'")]
    UnknownPreset(String),

    #[error("simulation failed: {0}")]
    Module(#[from] ugfsim::Error),

    #[error("cannot write {path}: {source}")]
    Output {
        path: String,
        source: std::io::Error,
    },
}

impl CliError {
    /// 2 for problems with the input, 1 for failures while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } | CliError::Parse(_) | CliError::Invalid(_) | CliError::UnknownPreset(_) => 2,
            CliError::Module(_) | CliError::Output { .. } => 1,
        }
    }
}
