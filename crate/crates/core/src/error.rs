use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("dimension {dim} does not factor as {dim_a}x{dim_b}")]
    NonFactorable {
        dim: usize,
        dim_a: usize,
        dim_b: usize,
    },

    #[error("matrix is not unitary (max deviation {deviation:e})")]
    NotUnitary { deviation: f64 },

    #[error("invalid density matrix: {0}")]
    InvalidDensity(String),

    #[error("vector is not normalized (squared norm {norm_sq})")]
    Unnormalized { norm_sq: f64 },

    #[error("amplitude {amplitude:e} at position {position} lies outside the two-qubit subspace")]
    Extraction { position: i32, amplitude: f64 },

    #[error("beam routing collision at path {path}")]
    Routing { path: i32 },

    #[error("invalid probability distribution: {0}")]
    InvalidDistribution(String),

    #[error("{name} = {value} is out of range")]
    OutOfRange { name: &'static str, value: f64 },

    #[error("{what} did not converge (residual {residual:e})")]
    NoConvergence { what: &'static str, residual: f64 },

    #[error("missing measurement setting {0}")]
    MissingSetting(String),

    #[error("invalid target index {0} (expected 0..=3)")]
    InvalidTarget(usize),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
