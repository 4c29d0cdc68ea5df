use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = WorkbenchError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum WorkbenchError {
    #[error(transparent)]
    Core(#[from] capillary_core::Error),

    #[error(transparent)]
    Gnn(#[from] capillary_gnn::GnnError),

    #[error(transparent)]
    Nn(#[from] capillary_nn::NnError),

    #[error("graph {id}: {source}")]
    Graph {
        id: usize,
        #[source]
        source: capillary_core::Error,
    },

    #[error("non-finite loss at epoch {epoch} on graph {graph}")]
    NonFiniteLoss { epoch: usize, graph: usize },

    #[error("manifest {path}: {message}")]
    Manifest { path: PathBuf, message: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl WorkbenchError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        WorkbenchError::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        use capillary_core::Error as E;
        let core_numerical = |e: &E| {
            matches!(
                e,
                E::SingularSystem(_) | E::NotConverged { .. } | E::Domain(_) | E::CyclicFlow | E::GenerationFailed { .. }
            )
        };
        match self {
            WorkbenchError::NonFiniteLoss { .. } => true,
            WorkbenchError::Core(e) | WorkbenchError::Graph { source: e, .. } => core_numerical(e),
            WorkbenchError::Gnn(capillary_gnn::GnnError::Core(e)) => core_numerical(e),
            WorkbenchError::Gnn(capillary_gnn::GnnError::Nn(capillary_nn::NnError::NonFinite(_)))
            | WorkbenchError::Nn(capillary_nn::NnError::NonFinite(_)) => true,
            _ => false,
        }
    }
}
