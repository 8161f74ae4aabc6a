use thiserror::Error;

use crate::config::ConfigError;
use crate::fem::FemError;
use crate::mesh::MeshError;
use crate::postproc::PostprocError;
use crate::scheme::SchemeError;
use crate::sparse::LinalgError;

pub type Result<T> = std::result::Result<T, Error>;

/// Crate-level error, wrapping the per-module error types.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Fem(#[from] FemError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Scheme(#[from] SchemeError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Postproc(#[from] PostprocError),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}
