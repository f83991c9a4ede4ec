//! Command-line error type: everything the binary can fail with, each
//! rendered as a single machine-parseable line `<kind>: <message>`.

use std::fmt;

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug)]
pub enum CliError {
    /// An estimation/simulation failure from the library.
    Core(cvci_core::error::Error),
    /// A malformed input file.
    Parse {
        path: String,
        row: usize,
        column: String,
        message: String,
    },
    Io {
        path: String,
        source: std::io::Error,
    },
    Config(String),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.kind(),
            CliError::Parse { .. } => "parse",
            CliError::Io { .. } => "io",
            CliError::Config(_) => "config",
        }
    }

    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{}: {}", e.kind(), e),
            CliError::Parse {
                path,
                row,
                column,
                message,
            } => write!(f, "parse: {path} row {row} column {column}: {message}"),
            CliError::Io { path, source } => write!(f, "io: {path}: {source}"),
            CliError::Config(msg) => write!(f, "config: {msg}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<cvci_core::error::Error> for CliError {
    fn from(e: cvci_core::error::Error) -> Self {
        CliError::Core(e)
    }
}
