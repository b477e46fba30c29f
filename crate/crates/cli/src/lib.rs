//! Command-line pipeline for training and evaluating static-condensation
//! reduced models of multipatch spline problems.

use std::path::{Path, PathBuf};

pub mod archive;
pub mod codec;
pub mod commands;
pub mod config;
pub mod modelfile;
pub mod pipeline;
pub mod report;

pub use archive::Archive;
pub use config::RunConfig;
pub use modelfile::{load_model, LoadedModel, ModelSpec};
pub use pipeline::{train, Stage, TrainOutcome, Trained};

pub const TOOL: &str = concat!("igarom ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Parse(String),
    #[error("invalid archive: {0}")]
    Format(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Validation(String),
    #[error(transparent)]
    Core(#[from] igarom::Error),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// Prefixes parse errors with the file they came from.
    pub fn in_file(self, path: &Path) -> Self {
        match self {
            CliError::Parse(m) => CliError::Parse(format!("{}: {m}", path.display())),
            e => e,
        }
    }

    /// 2 for usage, parse and I/O problems, 1 for failed validation or
    /// computation.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Parse(_) | CliError::Io { .. } => 2,
            CliError::Format(_) | CliError::Validation(_) | CliError::Core(_) => 1,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
