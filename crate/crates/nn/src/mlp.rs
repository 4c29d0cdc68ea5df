use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::backend::Backend;
use crate::error::{shape_err, Result};
use crate::params::{ParamId, ParamStore};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Identity,
    Gelu,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub weight: ParamId,
    pub bias: ParamId,
    pub activation: Activation,
}

/// Feed-forward network `f_L ∘ … ∘ f_1` with `f(z) = σ(z·W + b)` applied row-wise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub dims: Vec<usize>,
    pub layers: Vec<Layer>,
}

impl Mlp {
    /// `dims = [in, hidden…, out]`; hidden layers use `hidden`, the last `output`.
    pub fn new<R: Rng>(
        store: &mut ParamStore,
        name: &str,
        dims: &[usize],
        hidden: Activation,
        output: Activation,
        rng: &mut R,
    ) -> Result<Self> {
        if dims.len() < 2 || dims.contains(&0) {
            return shape_err("mlp", format!("invalid layer dimensions {dims:?}"));
        }
        let mut layers = Vec::with_capacity(dims.len() - 1);
        for (k, w) in dims.windows(2).enumerate() {
            let weight = store.add_glorot(format!("{name}.{k}.weight"), w[0], w[1], rng)?;
            let bias = store.add(format!("{name}.{k}.bias"), crate::Tensor::zeros(1, w[1]))?;
            let activation = if k + 2 == dims.len() { output } else { hidden };
            layers.push(Layer { weight, bias, activation });
        }
        Ok(Self {
            dims: dims.to_vec(),
            layers,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.dims.last().unwrap_or(&0)
    }

    /// Σ (in·out + out) over layers.
    pub fn parameter_count(&self) -> usize {
        self.dims.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }

    pub fn forward<B: Backend>(&self, b: &mut B, x: &B::Value) -> Result<B::Value> {
        let cols = b.value(x).cols();
        if cols != self.input_dim() {
            return shape_err("mlp_forward", format!("input width {cols}, expected {}", self.input_dim()));
        }
        let mut z = x.clone();
        for layer in &self.layers {
            let w = b.param(layer.weight);
            let bias = b.param(layer.bias);
            let lin = b.matmul(&z, &w)?;
            let lin = b.add_row(&lin, &bias)?;
            z = match layer.activation {
                Activation::Identity => lin,
                Activation::Gelu => b.gelu(&lin)?,
            };
        }
        Ok(z)
    }
}
