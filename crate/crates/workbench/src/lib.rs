//! Operational shell around `granulex`: configuration, CSV ingestion,
//! synthetic data, report emission and the `granulex` command line.

pub mod cli;
pub mod config;
pub mod data;
pub mod generators;
pub mod report;

#[derive(Debug, thiserror::Error)]
pub enum WorkbenchError {
    /// Bad command-line usage; exits with status 2.
    #[error("{0}")]
    Usage(String),
    #[error("config: {0}")]
    Config(String),
    #[error("data: {0}")]
    Data(String),
    #[error(transparent)]
    Core(#[from] granulex::Error),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl WorkbenchError {
    /// The message without its category prefix.
    pub fn message(&self) -> String {
        match self {
            Self::Usage(m) | Self::Config(m) | Self::Data(m) => m.clone(),
            other => other.to_string(),
        }
    }

    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Self::Io { context: context.into(), source }
    }
}
