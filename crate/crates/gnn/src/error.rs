use thiserror::Error;

use crate::config::Variant;

pub type Result<T, E = GnnError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum GnnError {
    #[error(transparent)]
    Nn(#[from] capillary_nn::NnError),

    #[error(transparent)]
    Core(#[from] capillary_core::Error),

    #[error("checkpoint was trained as model {checkpoint}, but model {requested} was requested")]
    VariantMismatch { checkpoint: Variant, requested: Variant },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("sample has no {0} target")]
    MissingTarget(&'static str),
}
