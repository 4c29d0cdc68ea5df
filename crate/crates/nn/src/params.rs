use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{NnError, Result};
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ParamId(pub usize);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedParam {
    pub name: String,
    pub value: Tensor,
}

/// Owner of all trainable arrays, addressed by [`ParamId`] in insertion order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamStore {
    params: Vec<NamedParam>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Rebuilds a store from saved parameters, rejecting duplicate names.
    pub fn from_params(params: Vec<NamedParam>) -> Result<Self> {
        let mut store = Self::new();
        for p in params {
            store.add(p.name, p.value)?;
        }
        Ok(store)
    }

    pub fn add(&mut self, name: impl Into<String>, value: Tensor) -> Result<ParamId> {
        let name = name.into();
        if self.params.iter().any(|p| p.name == name) {
            return Err(NnError::Checkpoint(format!("duplicate parameter name `{name}`")));
        }
        self.params.push(NamedParam { name, value });
        Ok(ParamId(self.params.len() - 1))
    }

    /// Uniform Glorot initialisation in ±√(6/(fan_in+fan_out)) of an
    /// `fan_in × fan_out` weight matrix.
    pub fn add_glorot<R: Rng>(&mut self, name: impl Into<String>, fan_in: usize, fan_out: usize, rng: &mut R) -> Result<ParamId> {
        let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
        let data = (0..fan_in * fan_out).map(|_| rng.gen_range(-bound..=bound)).collect();
        self.add(name, Tensor::new(fan_in, fan_out, data)?)
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn get(&self, id: ParamId) -> &Tensor {
        &self.params[id.0].value
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Tensor {
        &mut self.params[id.0].value
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.params[id.0].name
    }

    pub fn find(&self, name: &str) -> Option<ParamId> {
        self.params.iter().position(|p| p.name == name).map(ParamId)
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.params.len()).map(ParamId)
    }

    /// Total number of scalar parameters.
    pub fn scalar_count(&self) -> usize {
        self.params.iter().map(|p| p.value.data().len()).sum()
    }

    pub fn params(&self) -> &[NamedParam] {
        &self.params
    }

    pub fn into_params(self) -> Vec<NamedParam> {
        self.params
    }
}

/// Gradients produced by one backward pass, aligned with a [`ParamStore`].
#[derive(Debug, Clone)]
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
}

impl Gradients {
    pub fn new(grads: Vec<Option<Tensor>>) -> Self {
        Self { grads }
    }

    /// `None` for parameters the loss does not depend on.
    pub fn get(&self, id: ParamId) -> Option<&Tensor> {
        self.grads.get(id.0).and_then(Option::as_ref)
    }

    /// Gradient of `id`, with zeros for unreachable parameters.
    pub fn dense(&self, store: &ParamStore, id: ParamId) -> Tensor {
        self.get(id).cloned().unwrap_or_else(|| {
            let [r, c] = store.get(id).shape();
            Tensor::zeros(r, c)
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.grads
            .iter()
            .flatten()
            .flat_map(|t| t.data().iter())
            .fold(0.0, |m, x| m.max(x.abs()))
    }
}
