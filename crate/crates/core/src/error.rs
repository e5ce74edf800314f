use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix has a non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("eigensolver failed: {0}")]
    Solver(String),

    #[error("eigenpair {index} residual {residual:.3e} exceeds bound {bound:.3e}")]
    Residual {
        index: usize,
        residual: f64,
        bound: f64,
    },

    #[error("single-excitation dispersion is resonant at k = {k} (guided-mode matching)")]
    Resonance { k: f64 },

    #[error("band identification failed: {0}")]
    BandSelection(String),

    #[error("vanishing link overlap {overlap:.3e} at grid point ({k_index}, {phi_index})")]
    LinkOverlap {
        k_index: usize,
        phi_index: usize,
        overlap: f64,
    },

    #[error("index out of array bounds: {0}")]
    OutOfBounds(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl From<ndarray_linalg::error::LinalgError> for Error {
    fn from(e: ndarray_linalg::error::LinalgError) -> Self {
        Error::Solver(e.to_string())
    }
}
