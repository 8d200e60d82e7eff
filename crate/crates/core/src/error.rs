use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("infeasible scene: {0}")]
    InfeasibleSpec(String),

    #[error("pixel {pixel} has {available} candidate neighbors, {k} requested")]
    InfeasibleK { pixel: usize, available: usize, k: usize },

    #[error("format error at byte {offset}: {message}")]
    Format { offset: u64, message: String },

    #[error("shape mismatch: expected {expected_h}x{expected_w}, found {found_h}x{found_w}")]
    Shape {
        expected_h: usize,
        expected_w: usize,
        found_h: usize,
        found_w: usize,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("rank deficient embedding: eigenvalue {index} is {value:e}")]
    RankDeficient { index: usize, value: f64 },

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("dense graph of {n} pixels exceeds the limit of {limit}")]
    SizeGuard { n: usize, limit: usize },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures of the numerical pipeline rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::RankDeficient { .. } | Error::DegenerateInput(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
