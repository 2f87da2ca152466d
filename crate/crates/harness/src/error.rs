use std::path::PathBuf;

use thiserror::Error;

/// Process exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Status {
    Pass = 0,
    GateFailure = 1,
    InvalidInput = 2,
}

impl Status {
    pub fn code(self) -> i32 {
        self as i32
    }

    pub fn from_pass(pass: bool) -> Self {
        if pass {
            Status::Pass
        } else {
            Status::GateFailure
        }
    }
}

#[derive(Debug, Error)]
pub enum HarnessError {
    /// Unparseable or invalid configuration. `line` is 1-based.
    #[error("{}", config_message(.path, .line, .message))]
    Config {
        path: Option<PathBuf>,
        line: Option<usize>,
        message: String,
    },

    #[error(transparent)]
    Model(#[from] muskat_core::MuskatError),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error on {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn config_message(path: &Option<PathBuf>, line: &Option<usize>, message: &str) -> String {
    let file = path
        .as_ref()
        .map(|p| p.display().to_string())
        .unwrap_or_else(|| "<config>".into());
    match line {
        Some(l) => format!("{file}:{l}: {message}"),
        None => format!("{file}: {message}"),
    }
}

impl HarnessError {
    pub fn config(line: Option<usize>, message: impl Into<String>) -> Self {
        HarnessError::Config {
            path: None,
            line,
            message: message.into(),
        }
    }

    /// Attaches the file name to a configuration error.
    pub fn in_file(self, file: &std::path::Path) -> Self {
        match self {
            HarnessError::Config { line, message, .. } => HarnessError::Config {
                path: Some(file.to_path_buf()),
                line,
                message,
            },
            other => other,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn status(&self) -> Status {
        Status::InvalidInput
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
