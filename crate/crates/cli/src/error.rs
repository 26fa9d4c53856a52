use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("cannot read config {path}: {source}")]
    ConfigFile {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot write {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error(transparent)]
    Core(#[from] diga::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        use diga::Error as E;
        match self {
            CliError::Config(_) | CliError::ConfigFile { .. } => 2,
            CliError::Io { .. } | CliError::Csv { .. } => 3,
            CliError::Core(e) => match e {
                E::Config(_) | E::IncomparableStructure { .. } => 2,
                E::Parse { .. } | E::InvalidData(_) | E::EmptyDataset | E::Io { .. } => 3,
                _ => 1,
            },
        }
    }
}
