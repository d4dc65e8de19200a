use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("training diverged at epoch {epoch}: {detail}")]
    Diverged { epoch: usize, detail: String },

    #[error(transparent)]
    Core(#[from] mixae::Error),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// 0 success, 2 configuration, 3 numerical divergence, 4 I/O.
    pub fn exit_code(&self) -> i32 {
        use mixae::Error as E;
        match self {
            CliError::Config(_) => 2,
            CliError::Diverged { .. } => 3,
            CliError::Io { .. } => 4,
            CliError::Core(e) => match e {
                E::Numerical { .. } => 3,
                E::Io { .. } | E::Format { .. } | E::Parse { .. } => 4,
                _ => 2,
            },
        }
    }
}
