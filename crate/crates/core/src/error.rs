use std::io;

use thiserror::Error;

/// Errors raised anywhere in the pipeline.
///
/// Each variant maps onto one CLI exit code, see [`Error::exit_code`].
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed file header, truncated payload, bad CSV row.
    #[error("format error: {0}")]
    Format(String),

    /// Values violate a data invariant (non-finite, out of range, single class).
    #[error("data error: {0}")]
    Data(String),

    /// Invalid parameters or an inconsistent request.
    #[error("config error: {0}")]
    Config(String),

    /// Dimension mismatch between operands.
    #[error("shape error: {0}")]
    Shape(String),

    /// Input has no usable spread (all rows identical, zero variance).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// A numerical routine failed (non-convergence, singular system).
    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// Process exit code: 2 config, 3 data, 4 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Format(_)
            | Error::Data(_)
            | Error::Shape(_)
            | Error::Degenerate(_)
            | Error::Io { .. } => 3,
            Error::Numerical(_) => 4,
        }
    }
}
