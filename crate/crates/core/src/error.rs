use thiserror::Error;

use crate::solution::FlowSolution;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("inlet and outlet sets overlap at node {0}")]
    OverlappingBoundary(usize),

    #[error("invalid boundary conditions: {0}")]
    InvalidBoundary(String),

    #[error("boundary detection produced no {0} nodes")]
    EmptyBoundary(&'static str),

    #[error("schema error at {location}: {message}")]
    Schema { location: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("singular system: {0}")]
    SingularSystem(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("flow on edge {edge} is below the orientation threshold ({flow:e})")]
    AmbiguousOrientation { edge: usize, flow: f64 },

    #[error("flow orientation contains a directed cycle")]
    CyclicFlow,

    #[error("fixed point did not converge after {iterations} iterations (last change {last_change:e})")]
    NotConverged {
        iterations: usize,
        last_change: f64,
        last: Box<FlowSolution>,
    },

    #[error("network generation failed at stage `{stage}` after {attempts} attempt(s)")]
    GenerationFailed { stage: String, attempts: usize },

    #[error("degenerate tessellation: {0}")]
    DegenerateTessellation(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

impl Error {
    pub(crate) fn schema(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Schema {
            location: location.into(),
            message: message.into(),
        }
    }
}
