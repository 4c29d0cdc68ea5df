//! Reverse-mode automatic differentiation over a recorded operation list.

use std::collections::HashMap;

use crate::backend::{Backend, ElementFn, Index};
use crate::error::{shape_err, NnError, Result};
use crate::params::{Gradients, ParamId, ParamStore};
use crate::tensor::{self, finite, gemm_into, Tensor};

/// Handle to a recorded value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

#[derive(Debug)]
enum Op {
    Const,
    Param(ParamId),
    MatMul(Var, Var),
    AddRow(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    Concat(Vec<Var>),
    Gather(Var, Index),
    ScatterAdd(Var, Index),
    SelectCol(Var, usize),
    Gelu(Var),
    /// Elementwise map with its stored derivative.
    Map(Var, Vec<f64>),
    SumSquares(Var),
}

impl Op {
    fn inputs(&self) -> Vec<Var> {
        match self {
            Op::Const | Op::Param(_) => vec![],
            Op::MatMul(a, b) | Op::AddRow(a, b) | Op::Add(a, b) | Op::Sub(a, b) | Op::Mul(a, b) => vec![*a, *b],
            Op::Concat(parts) => parts.clone(),
            Op::Scale(a, _)
            | Op::Gather(a, _)
            | Op::ScatterAdd(a, _)
            | Op::SelectCol(a, _)
            | Op::Gelu(a)
            | Op::Map(a, _)
            | Op::SumSquares(a) => vec![*a],
        }
    }
}

struct Node {
    value: Tensor,
    op: Op,
    /// Whether any parameter feeds this node.
    active: bool,
}

/// Records operations on values derived from a [`ParamStore`].
pub struct Tape<'p> {
    store: &'p ParamStore,
    nodes: Vec<Node>,
    params: HashMap<ParamId, Var>,
}

impl<'p> Tape<'p> {
    pub fn new(store: &'p ParamStore) -> Self {
        Self {
            store,
            nodes: Vec::new(),
            params: HashMap::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Tensor, op: Op, name: &'static str) -> Result<Var> {
        let value = finite(value, name)?;
        let active = match op {
            Op::Param(_) => true,
            Op::Const => false,
            _ => op.inputs().iter().any(|v| self.nodes[v.0].active),
        };
        self.nodes.push(Node { value, op, active });
        Ok(Var(self.nodes.len() - 1))
    }

    fn val(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    /// Gradients of the scalar `loss` with respect to every parameter used.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        let [r, c] = self.val(loss).shape();
        if (r, c) != (1, 1) {
            return Err(NnError::NotScalar(r, c));
        }
        let mut grads: Vec<Option<Tensor>> = Vec::new();
        grads.resize_with(loss.0 + 1, || None);
        grads[loss.0] = Some(Tensor::scalar(1.0));
        let mut out: Vec<Option<Tensor>> = vec![None; self.store.len()];

        for i in (0..=loss.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            let node = &self.nodes[i];
            if !node.active {
                continue;
            }
            if node.op.inputs().iter().any(|v| v.0 >= i) {
                return Err(NnError::GraphCycle);
            }
            let mut acc = |v: Var, t: Tensor| {
                if !self.nodes[v.0].active {
                    return;
                }
                match &mut grads[v.0] {
                    Some(existing) => existing.add_assign(&t),
                    slot => *slot = Some(t),
                }
            };
            match &node.op {
                Op::Const => {}
                Op::Param(id) => match &mut out[id.0] {
                    Some(existing) => existing.add_assign(&g),
                    slot => *slot = Some(g),
                },
                Op::MatMul(a, b) => {
                    let (av, bv) = (self.val(*a), self.val(*b));
                    if self.nodes[a.0].active {
                        let mut ga = Tensor::zeros(av.rows(), av.cols());
                        gemm_into(&g, false, bv, true, &mut ga);
                        acc(*a, ga);
                    }
                    if self.nodes[b.0].active {
                        let mut gb = Tensor::zeros(bv.rows(), bv.cols());
                        gemm_into(av, true, &g, false, &mut gb);
                        acc(*b, gb);
                    }
                }
                Op::AddRow(a, b) => {
                    let cols = g.cols();
                    let mut gb = Tensor::zeros(1, cols);
                    for row in g.data().chunks(cols.max(1)) {
                        for (s, x) in gb.data_mut().iter_mut().zip(row) {
                            *s += x;
                        }
                    }
                    acc(*b, gb);
                    acc(*a, g);
                }
                Op::Add(a, b) => {
                    acc(*b, g.clone());
                    acc(*a, g);
                }
                Op::Sub(a, b) => {
                    acc(*b, g.map(|x| -x));
                    acc(*a, g);
                }
                Op::Mul(a, b) => {
                    let ga = tensor::mul(&g, self.val(*b))?;
                    let gb = tensor::mul(&g, self.val(*a))?;
                    acc(*a, ga);
                    acc(*b, gb);
                }
                Op::Scale(a, c) => acc(*a, g.map(|x| c * x)),
                Op::Concat(parts) => {
                    let mut offset = 0;
                    for p in parts {
                        let w = self.val(*p).cols();
                        let mut data = Vec::with_capacity(g.rows() * w);
                        for r in 0..g.rows() {
                            data.extend_from_slice(&g.row(r)[offset..offset + w]);
                        }
                        acc(*p, Tensor::new(g.rows(), w, data)?);
                        offset += w;
                    }
                }
                Op::Gather(a, idx) => acc(*a, tensor::scatter_add_rows(&g, idx, self.val(*a).rows())?),
                Op::ScatterAdd(a, idx) => acc(*a, tensor::gather_rows(&g, idx)?),
                Op::SelectCol(a, j) => {
                    let av = self.val(*a);
                    let mut ga = Tensor::zeros(av.rows(), av.cols());
                    for r in 0..av.rows() {
                        ga.data_mut()[r * av.cols() + j] = g.get(r, 0);
                    }
                    acc(*a, ga);
                }
                Op::Gelu(a) => {
                    let d = self.val(*a).map(tensor::gelu_derivative);
                    acc(*a, tensor::mul(&g, &d)?);
                }
                Op::Map(a, d) => {
                    let mut ga = g;
                    for (x, dx) in ga.data_mut().iter_mut().zip(d) {
                        *x *= dx;
                    }
                    acc(*a, ga);
                }
                Op::SumSquares(a) => {
                    let s = 2.0 * g.item();
                    acc(*a, self.val(*a).map(|x| s * x));
                }
            }
        }
        if out.iter().flatten().any(|t| !t.is_finite()) {
            return Err(NnError::NonFinite("backward"));
        }
        Ok(Gradients::new(out))
    }
}

impl Backend for Tape<'_> {
    type Value = Var;

    fn constant(&mut self, t: Tensor) -> Var {
        self.nodes.push(Node {
            value: t,
            op: Op::Const,
            active: false,
        });
        Var(self.nodes.len() - 1)
    }

    fn param(&mut self, id: ParamId) -> Var {
        if let Some(&v) = self.params.get(&id) {
            return v;
        }
        let value = self.store.get(id).clone();
        self.nodes.push(Node {
            value,
            op: Op::Param(id),
            active: true,
        });
        let v = Var(self.nodes.len() - 1);
        self.params.insert(id, v);
        v
    }

    fn value<'a>(&'a self, v: &'a Var) -> &'a Tensor {
        self.val(*v)
    }

    fn matmul(&mut self, a: &Var, b: &Var) -> Result<Var> {
        let t = tensor::matmul(self.val(*a), self.val(*b))?;
        self.push(t, Op::MatMul(*a, *b), "matmul")
    }

    fn add_row(&mut self, a: &Var, row: &Var) -> Result<Var> {
        let t = tensor::add_row(self.val(*a), self.val(*row))?;
        self.push(t, Op::AddRow(*a, *row), "add_row")
    }

    fn add(&mut self, a: &Var, b: &Var) -> Result<Var> {
        let t = tensor::add(self.val(*a), self.val(*b))?;
        self.push(t, Op::Add(*a, *b), "add")
    }

    fn sub(&mut self, a: &Var, b: &Var) -> Result<Var> {
        let t = tensor::sub(self.val(*a), self.val(*b))?;
        self.push(t, Op::Sub(*a, *b), "sub")
    }

    fn mul(&mut self, a: &Var, b: &Var) -> Result<Var> {
        let t = tensor::mul(self.val(*a), self.val(*b))?;
        self.push(t, Op::Mul(*a, *b), "mul")
    }

    fn scale(&mut self, a: &Var, c: f64) -> Result<Var> {
        let t = self.val(*a).map(|x| c * x);
        self.push(t, Op::Scale(*a, c), "scale")
    }

    fn concat(&mut self, parts: &[&Var]) -> Result<Var> {
        let values: Vec<&Tensor> = parts.iter().map(|v| self.val(**v)).collect();
        let t = tensor::concat_cols(&values)?;
        self.push(t, Op::Concat(parts.iter().map(|v| **v).collect()), "concat")
    }

    fn gather(&mut self, a: &Var, idx: &Index) -> Result<Var> {
        let t = tensor::gather_rows(self.val(*a), idx)?;
        self.push(t, Op::Gather(*a, idx.clone()), "gather")
    }

    fn scatter_add(&mut self, a: &Var, idx: &Index, n: usize) -> Result<Var> {
        let t = tensor::scatter_add_rows(self.val(*a), idx, n)?;
        self.push(t, Op::ScatterAdd(*a, idx.clone()), "scatter_add")
    }

    fn select_col(&mut self, a: &Var, j: usize) -> Result<Var> {
        let t = tensor::select_col(self.val(*a), j)?;
        self.push(t, Op::SelectCol(*a, j), "select_col")
    }

    fn gelu(&mut self, a: &Var) -> Result<Var> {
        let t = self.val(*a).map(tensor::gelu);
        self.push(t, Op::Gelu(*a), "gelu")
    }

    fn map(&mut self, a: &Var, f: ElementFn) -> Result<Var> {
        let x = self.val(*a);
        let (rows, cols) = (x.rows(), x.cols());
        let (values, derivs): (Vec<f64>, Vec<f64>) = x.data().iter().enumerate().map(|(i, &v)| f(i, v)).unzip();
        if derivs.iter().any(|d| !d.is_finite()) {
            return Err(NnError::NonFinite("map derivative"));
        }
        let t = Tensor::new(rows, cols, values)?;
        self.push(t, Op::Map(*a, derivs), "map")
    }

    fn sum_squares(&mut self, a: &Var) -> Result<Var> {
        let s = self.val(*a).data().iter().map(|x| x * x).sum();
        self.push(Tensor::scalar(s), Op::SumSquares(*a), "sum_squares")
    }
}

/// Checks that `v` is a column vector of length `n`.
pub fn expect_column(t: &Tensor, n: usize, op: &'static str) -> Result<()> {
    if t.shape() != [n, 1] {
        return shape_err(op, format!("expected {n}×1, got {:?}", t.shape()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_gradient_is_twice_theta() {
        let mut store = ParamStore::new();
        let theta = store.add("theta", Tensor::new(2, 2, vec![1.0, -2.0, 0.5, 3.0]).unwrap()).unwrap();
        let unused = store.add("unused", Tensor::scalar(7.0)).unwrap();
        let mut tape = Tape::new(&store);
        let t = tape.param(theta);
        let loss = tape.sum_squares(&t).unwrap();
        let g = tape.backward(loss).unwrap();
        assert_eq!(g.get(theta).unwrap().data(), &[2.0, -4.0, 1.0, 6.0]);
        assert!(g.get(unused).is_none());
        assert_eq!(g.dense(&store, unused).data(), &[0.0]);
    }

    #[test]
    fn non_scalar_loss_is_rejected() {
        let mut store = ParamStore::new();
        let p = store.add("p", Tensor::zeros(2, 1)).unwrap();
        let mut tape = Tape::new(&store);
        let v = tape.param(p);
        assert!(matches!(tape.backward(v), Err(NnError::NotScalar(2, 1))));
    }

    #[test]
    fn non_finite_values_are_reported() {
        let store = ParamStore::new();
        let mut tape = Tape::new(&store);
        let x = tape.constant(Tensor::scalar(1.0));
        let r = tape.map(&x, &|_, v| (v / 0.0, 0.0));
        assert!(matches!(r, Err(NnError::NonFinite(_))));
    }

    #[test]
    fn reused_parameter_accumulates() {
        let mut store = ParamStore::new();
        let p = store.add("p", Tensor::scalar(3.0)).unwrap();
        let mut tape = Tape::new(&store);
        let a = tape.param(p);
        let b = tape.param(p);
        let prod = tape.mul(&a, &b).unwrap();
        let loss = tape.scale(&prod, 1.0).unwrap();
        let g = tape.backward(loss).unwrap();
        assert_eq!(g.get(p).unwrap().item(), 6.0);
    }
}
