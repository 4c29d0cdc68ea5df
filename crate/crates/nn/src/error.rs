use thiserror::Error;

pub type Result<T, E = NnError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum NnError {
    #[error("shape mismatch in {op}: {detail}")]
    ShapeMismatch { op: &'static str, detail: String },

    #[error("non-finite value produced by {0}")]
    NonFinite(&'static str),

    #[error("tape references a later node; recorded graph is not acyclic")]
    GraphCycle,

    #[error("backward requires a 1×1 loss, got {0}×{1}")]
    NotScalar(usize, usize),

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub(crate) fn shape_err<T>(op: &'static str, detail: String) -> Result<T> {
    Err(NnError::ShapeMismatch { op, detail })
}
