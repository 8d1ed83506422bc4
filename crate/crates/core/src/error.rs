//! Error taxonomy for the engine.
//!
//! Three broad classes map onto the CLI exit codes: configuration problems
//! (bad keys, inconsistent parameters), data problems (unparseable or
//! inconsistent input files), and runtime failures inside a run.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("config error: {0}")]
    Config(String),

    #[error("data error in {file} (row {row}): {message}")]
    DataRow {
        file: String,
        row: usize,
        message: String,
    },

    #[error("data error: {0}")]
    Data(String),

    #[error("runtime error: {0}")]
    Runtime(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }

    pub fn runtime(msg: impl Into<String>) -> Self {
        Error::Runtime(msg.into())
    }

    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code the CLI should use for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::DataRow { .. } | Error::Data(_) => 3,
            Error::Io { .. } => 3,
            Error::Runtime(_) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
