use thiserror::Error;

/// Errors produced by the feeding-control pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: malformed record: {message}")]
    Parse { line: usize, message: String },

    #[error("{}invalid record: {message}", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
    Validation {
        line: Option<usize>,
        message: String,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("degenerate ripple geometry: z = {z} is not above the minimum")]
    DegenerateGeometry { z: f64 },

    #[error("degenerate passed line: defining points share x (dx = {dx})")]
    DegenerateLine { dx: f64 },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("training diverged at iteration {iteration} (loss = {loss})")]
    Divergence { iteration: usize, loss: f64 },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("no harvestable training pairs in the stream")]
    EmptyDataset,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn validation(message: impl Into<String>) -> Self {
        Error::Validation {
            line: None,
            message: message.into(),
        }
    }

    pub(crate) fn shape(message: impl Into<String>) -> Self {
        Error::Shape(message.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
