//! Operations shared by recorded (differentiable) and eager evaluation, so
//! model code is written once.

use std::sync::Arc;

use crate::error::Result;
use crate::params::{ParamId, ParamStore};
use crate::tensor::{self, finite, Tensor};

/// Shared row-index list for gather/scatter.
pub type Index = Arc<[usize]>;

/// Elementwise map returning `(f(x), f'(x))` for entry `i`.
pub type ElementFn<'a> = &'a dyn Fn(usize, f64) -> (f64, f64);

pub trait Backend {
    type Value: Clone;

    fn constant(&mut self, t: Tensor) -> Self::Value;
    fn param(&mut self, id: ParamId) -> Self::Value;
    fn value<'a>(&'a self, v: &'a Self::Value) -> &'a Tensor;

    fn matmul(&mut self, a: &Self::Value, b: &Self::Value) -> Result<Self::Value>;
    fn add_row(&mut self, a: &Self::Value, row: &Self::Value) -> Result<Self::Value>;
    fn add(&mut self, a: &Self::Value, b: &Self::Value) -> Result<Self::Value>;
    fn sub(&mut self, a: &Self::Value, b: &Self::Value) -> Result<Self::Value>;
    fn mul(&mut self, a: &Self::Value, b: &Self::Value) -> Result<Self::Value>;
    fn scale(&mut self, a: &Self::Value, c: f64) -> Result<Self::Value>;
    fn concat(&mut self, parts: &[&Self::Value]) -> Result<Self::Value>;
    fn gather(&mut self, a: &Self::Value, idx: &Index) -> Result<Self::Value>;
    fn scatter_add(&mut self, a: &Self::Value, idx: &Index, n: usize) -> Result<Self::Value>;
    fn select_col(&mut self, a: &Self::Value, j: usize) -> Result<Self::Value>;
    fn gelu(&mut self, a: &Self::Value) -> Result<Self::Value>;
    fn map(&mut self, a: &Self::Value, f: ElementFn) -> Result<Self::Value>;
    /// `Σ a²` as a `1 × 1` tensor.
    fn sum_squares(&mut self, a: &Self::Value) -> Result<Self::Value>;
}

/// Plain evaluation with no recording; used for inference.
pub struct Eager<'p> {
    store: &'p ParamStore,
}

impl<'p> Eager<'p> {
    pub fn new(store: &'p ParamStore) -> Self {
        Self { store }
    }
}

impl Backend for Eager<'_> {
    type Value = Tensor;

    fn constant(&mut self, t: Tensor) -> Tensor {
        t
    }

    fn param(&mut self, id: ParamId) -> Tensor {
        self.store.get(id).clone()
    }

    fn value<'a>(&'a self, v: &'a Tensor) -> &'a Tensor {
        v
    }

    fn matmul(&mut self, a: &Tensor, b: &Tensor) -> Result<Tensor> {
        finite(tensor::matmul(a, b)?, "matmul")
    }

    fn add_row(&mut self, a: &Tensor, row: &Tensor) -> Result<Tensor> {
        finite(tensor::add_row(a, row)?, "add_row")
    }

    fn add(&mut self, a: &Tensor, b: &Tensor) -> Result<Tensor> {
        finite(tensor::add(a, b)?, "add")
    }

    fn sub(&mut self, a: &Tensor, b: &Tensor) -> Result<Tensor> {
        finite(tensor::sub(a, b)?, "sub")
    }

    fn mul(&mut self, a: &Tensor, b: &Tensor) -> Result<Tensor> {
        finite(tensor::mul(a, b)?, "mul")
    }

    fn scale(&mut self, a: &Tensor, c: f64) -> Result<Tensor> {
        finite(a.map(|x| c * x), "scale")
    }

    fn concat(&mut self, parts: &[&Tensor]) -> Result<Tensor> {
        tensor::concat_cols(parts)
    }

    fn gather(&mut self, a: &Tensor, idx: &Index) -> Result<Tensor> {
        tensor::gather_rows(a, idx)
    }

    fn scatter_add(&mut self, a: &Tensor, idx: &Index, n: usize) -> Result<Tensor> {
        finite(tensor::scatter_add_rows(a, idx, n)?, "scatter_add")
    }

    fn select_col(&mut self, a: &Tensor, j: usize) -> Result<Tensor> {
        tensor::select_col(a, j)
    }

    fn gelu(&mut self, a: &Tensor) -> Result<Tensor> {
        Ok(a.map(tensor::gelu))
    }

    fn map(&mut self, a: &Tensor, f: ElementFn) -> Result<Tensor> {
        let data = a.data().iter().enumerate().map(|(i, &x)| f(i, x).0).collect();
        finite(Tensor::new(a.rows(), a.cols(), data)?, "map")
    }

    fn sum_squares(&mut self, a: &Tensor) -> Result<Tensor> {
        finite(Tensor::scalar(a.data().iter().map(|x| x * x).sum()), "sum_squares")
    }
}
