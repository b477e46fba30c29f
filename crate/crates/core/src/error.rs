use thiserror::Error;

/// Errors raised by the numerical kernels and the modelling pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid knot vector: {0}")]
    InvalidKnots(String),

    #[error("singular geometry: det DF = {det:e} at xi = {xi:?}, mu = {mu:?}")]
    SingularGeometry { det: f64, xi: Vec<f64>, mu: Vec<f64> },

    #[error("parameter out of bounds at indices {indices:?}")]
    ParameterOutOfBounds { indices: Vec<usize> },

    #[error("ambiguous interface between patch {patch_a} face {face_a} and patch {patch_b} face {face_b}: max deviation {deviation:e}")]
    AmbiguousInterface {
        patch_a: usize,
        face_a: usize,
        patch_b: usize,
        face_b: usize,
        deviation: f64,
    },

    #[error("singular system: {0}")]
    SingularSystem(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

pub type Result<T> = std::result::Result<T, Error>;
