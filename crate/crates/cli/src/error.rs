use std::path::PathBuf;

use qswitch_core::ModelError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("schema error at line {line}, column {column}: {message}")]
    Schema {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid {field}: {reason}")]
    Invalid { field: String, reason: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Syntax { .. } => "syntax",
            CliError::Schema { .. } => "schema",
            CliError::Invalid { .. } => "invalid-config",
            CliError::Io { .. } => "io",
            CliError::Model(e) => e.kind(),
        }
    }

    /// `error kind=<kind> message="<text>"`, with quotes and backslashes in
    /// the message escaped.
    pub fn line(&self) -> String {
        let message = self
            .to_string()
            .replace('\\', "\\\\")
            .replace('"', "\\\"")
            .replace('\n', " ");
        format!("error kind={} message=\"{}\"", self.kind(), message)
    }
}
