use thiserror::Error;

/// Errors produced anywhere in the learning, control and experiment pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("state escaped to ({x}, {y})")]
    Escaped { x: f64, y: f64 },

    #[error("control effectiveness is not invertible (|w_u| = {0:e})")]
    NonInvertibleEffectiveness(f64),

    #[error("training failed: {0}")]
    Training(String),

    #[error("data generation failed after {retries} attempts")]
    Generation { retries: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
