use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degenerate direction: points coincide (distance {0:e})")]
    DegenerateDirection(f64),

    #[error("degenerate triangle: {0}")]
    DegenerateTriangle(String),

    #[error("numerical consistency violated: {0}")]
    Numerical(String),

    #[error("domain too thin: accepted {accepted} of {proposals} proposals")]
    DomainTooThin { accepted: u64, proposals: u64 },

    #[error("empty region: {0}")]
    EmptyRegion(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("graph is disconnected: {} components {components:?}", components.len())]
    Disconnected { components: Vec<Vec<usize>> },

    #[error("size guard exceeded: {0}")]
    SizeGuard(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
