//! Minimal neural-network substrate: row-major tensors, a reverse-mode
//! tape, GELU feed-forward networks and the Adam optimiser.
//!
//! GELU uses the exact Gaussian-CDF form `x·Φ(x)`, not the tanh approximation.

pub mod adam;
pub mod backend;
pub mod checkpoint;
pub mod error;
pub mod gradcheck;
pub mod mlp;
pub mod params;
pub mod tape;
pub mod tensor;

pub use adam::{Adam, AdamConfig};
pub use backend::{Backend, Eager, ElementFn, Index};
pub use checkpoint::{Checkpoint, CHECKPOINT_VERSION};
pub use error::{NnError, Result};
pub use gradcheck::{gradient_check, GradCheck};
pub use mlp::{Activation, Layer, Mlp};
pub use params::{Gradients, NamedParam, ParamId, ParamStore};
pub use tape::{Tape, Var};
pub use tensor::{gelu, gelu_derivative, Tensor};
