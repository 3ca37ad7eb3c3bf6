use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised anywhere in the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("format error: {0}")]
    Format(String),
    #[error("truncated data: {0}")]
    Truncated(String),
    #[error("unsupported bit depth: maxval {0} exceeds 255")]
    UnsupportedDepth(u32),
    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),
    #[error("corrupt data: {0}")]
    Corrupt(String),
    #[error("dimension error: {0}")]
    Dimension(String),
    #[error("dataset error: {0}")]
    Dataset(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("class coverage error: {0}")]
    Coverage(String),
    #[error("alignment error: {0}")]
    Alignment(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("failed to converge: {0}")]
    Convergence(String),
    #[error("missing artifact: {}", .0.display())]
    MissingArtifact(PathBuf),
    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("json error in {}: {source}", path.display())]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn json(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        Error::Json {
            path: path.into(),
            source,
        }
    }

    /// Errors caused by bad configuration or arguments rather than bad data.
    pub fn is_config_error(&self) -> bool {
        matches!(self, Error::Config(_) | Error::Parameter(_))
    }
}

pub(crate) fn dims_match(what: &str, expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::Dimension(format!(
            "{what}: expected dimension {expected}, got {got}"
        )));
    }
    Ok(())
}
