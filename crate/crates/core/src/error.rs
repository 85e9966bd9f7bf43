use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("mesh parse error at line {line}: {msg}")]
    MeshParse { line: usize, msg: String },

    #[error("non-manifold mesh: {msg} (triangle {triangle})")]
    NonManifold { triangle: usize, msg: String },

    #[error("degenerate triangle {triangle}: area {area:e}")]
    DegenerateTriangle { triangle: usize, area: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite matrix entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("singular system in {context} (pivot ratio estimate {condition:e})")]
    Singular { context: String, condition: f64 },

    #[error("port {port} out of range for {n} basis functions")]
    PortOutOfRange { port: usize, n: usize },

    #[error("port {0} carries more than one load")]
    PortCollision(usize),

    #[error("waveform is not usable here: {0}")]
    Waveform(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("scenario: {0}")]
    Schema(String),

    #[error("matrix file {path}: {msg}")]
    MatrixFile { path: PathBuf, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
