use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value is out of range or inconsistent with the data.
    #[error("configuration error: {0}")]
    Config(String),

    /// Matrix or layer shapes do not line up.
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("empty dataset: cost needs at least one example")]
    EmptyDataset,

    #[error("invalid cost {value} at index {index}: costs must be finite and nonnegative")]
    InvalidCost { index: usize, value: f64 },

    #[error("cannot compare architectures with {left} and {right} layers")]
    IncomparableStructure { left: usize, right: usize },

    #[error("search space exhausted: produced {found} of {wanted} distinct architectures in {attempts} draws")]
    SearchSpaceExhausted {
        wanted: usize,
        found: usize,
        attempts: usize,
    },

    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: u64, message: String },

    #[error("invalid dataset: {0}")]
    InvalidData(String),

    #[error("numeric divergence at iteration {iteration}: last finite cost {last_finite_cost:?}")]
    Numeric {
        iteration: usize,
        last_finite_cost: Option<f64>,
    },

    #[error("run record is not finalized")]
    Unfinalized,

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }

    pub(crate) fn parse(offset: u64, msg: impl Into<String>) -> Self {
        Error::Parse {
            offset,
            message: msg.into(),
        }
    }
}
