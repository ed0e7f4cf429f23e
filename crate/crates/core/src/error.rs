use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid image: {0}")]
    InvalidImage(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Decode { path: PathBuf, message: String },

    #[error("{path}:{line}: {message}")]
    Manifest {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("config: {0}")]
    Config(String),

    #[error("sample {id}: missing segmentation mask")]
    MissingMask { id: String },

    #[error("sample {id}: segmentation mask has no foreground pixels")]
    EmptyMask { id: String },

    #[error("thin plate spline fit failed: {0}")]
    SingularSystem(String),

    #[error("stage {stage} ({kind}): {source}")]
    Stage {
        stage: usize,
        kind: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("AUC undefined: {0}")]
    UndefinedAuc(String),

    #[error("predictor failed on sample {id}, copy {copy}: {message}")]
    Predictor {
        id: String,
        copy: usize,
        message: String,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
