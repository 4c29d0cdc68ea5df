//! Graph neural network surrogate: normalised node/edge features on the
//! symmetrised graph, an encoder-processor-decoder with skip connections,
//! the velocity transform, and the supervised and physics-informed losses.

pub mod config;
pub mod error;
pub mod export;
pub mod features;
pub mod loss;
pub mod model;
pub mod transform;

pub use config::{FeatureScales, GnnConfig, Variant};
pub use error::{GnnError, Result};
pub use export::prediction_file;
pub use features::{build_features, GraphInputs, PhysicsContext, Sample, Targets};
pub use loss::{relative_error, variant_loss, LossTerms, LossWeights, Norm, C_M, C_P};
pub use model::{GnnArchitecture, GnnModel, Outputs, Prediction};
pub use transform::{velocity_transform, velocity_transform_inv};
