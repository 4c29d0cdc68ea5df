//! Row-major dense matrices and the kernels shared by the tape and eager
//! evaluation.

use serde::{Deserialize, Serialize};

use crate::error::{shape_err, NnError, Result};

/// A row-major `rows × cols` matrix. Vectors are `n × 1`, scalars `1 × 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Tensor {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return shape_err("tensor", format!("{rows}×{cols} needs {} values, got {}", rows * cols, data.len()));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn scalar(x: f64) -> Self {
        Self {
            rows: 1,
            cols: 1,
            data: vec![x],
        }
    }

    pub fn column(values: Vec<f64>) -> Self {
        Self {
            rows: values.len(),
            cols: 1,
            data: values,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> [usize; 2] {
        [self.rows, self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    /// The single entry of a `1 × 1` tensor.
    pub fn item(&self) -> f64 {
        debug_assert_eq!(self.data.len(), 1);
        self.data[0]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub(crate) fn same_shape(&self, other: &Tensor, op: &'static str) -> Result<()> {
        if self.shape() != other.shape() {
            return shape_err(op, format!("{:?} vs {:?}", self.shape(), other.shape()));
        }
        Ok(())
    }

    pub(crate) fn add_assign(&mut self, other: &Tensor) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    fn zip_with(&self, other: &Tensor, f: impl Fn(f64, f64) -> f64) -> Tensor {
        Tensor {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    pub(crate) fn map(&self, f: impl Fn(f64) -> f64) -> Tensor {
        Tensor {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&a| f(a)).collect(),
        }
    }
}

pub(crate) fn finite(t: Tensor, op: &'static str) -> Result<Tensor> {
    if t.is_finite() {
        Ok(t)
    } else {
        Err(NnError::NonFinite(op))
    }
}

/// `c ← α·op(a)·op(b) + c` where `op` optionally transposes.
pub(crate) fn gemm_into(a: &Tensor, ta: bool, b: &Tensor, tb: bool, c: &mut Tensor) {
    let (m, k) = if ta { (a.cols, a.rows) } else { (a.rows, a.cols) };
    let n = if tb { b.rows } else { b.cols };
    debug_assert_eq!(c.shape(), [m, n]);
    if m == 0 || n == 0 || k == 0 {
        return;
    }
    let (rsa, csa) = if ta { (1, a.cols as isize) } else { (a.cols as isize, 1) };
    let (rsb, csb) = if tb { (1, b.cols as isize) } else { (b.cols as isize, 1) };
    // SAFETY: the strides describe in-bounds views of the three buffers,
    // whose sizes were checked by the callers.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.data.as_ptr(),
            rsa,
            csa,
            b.data.as_ptr(),
            rsb,
            csb,
            1.0,
            c.data.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

pub fn matmul(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    if a.cols != b.rows {
        return shape_err("matmul", format!("{:?} · {:?}", a.shape(), b.shape()));
    }
    let mut c = Tensor::zeros(a.rows, b.cols);
    gemm_into(a, false, b, false, &mut c);
    Ok(c)
}

/// Adds the `1 × cols` row `b` to every row of `a`.
pub fn add_row(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    if b.rows != 1 || b.cols != a.cols {
        return shape_err("add_row", format!("{:?} + row {:?}", a.shape(), b.shape()));
    }
    let mut out = a.clone();
    for row in out.data.chunks_mut(a.cols.max(1)) {
        for (x, y) in row.iter_mut().zip(&b.data) {
            *x += y;
        }
    }
    Ok(out)
}

pub fn add(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    a.same_shape(b, "add")?;
    Ok(a.zip_with(b, |x, y| x + y))
}

pub fn sub(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    a.same_shape(b, "sub")?;
    Ok(a.zip_with(b, |x, y| x - y))
}

pub fn mul(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    a.same_shape(b, "mul")?;
    Ok(a.zip_with(b, |x, y| x * y))
}

pub fn concat_cols(parts: &[&Tensor]) -> Result<Tensor> {
    let Some(first) = parts.first() else {
        return shape_err("concat", "no inputs".into());
    };
    let rows = first.rows;
    if let Some(p) = parts.iter().find(|p| p.rows != rows) {
        return shape_err("concat", format!("row counts {rows} and {}", p.rows));
    }
    let cols: usize = parts.iter().map(|p| p.cols).sum();
    let mut data = Vec::with_capacity(rows * cols);
    for i in 0..rows {
        for p in parts {
            data.extend_from_slice(p.row(i));
        }
    }
    Ok(Tensor { rows, cols, data })
}

/// Rows `a[idx[0]], a[idx[1]], …`.
pub fn gather_rows(a: &Tensor, idx: &[usize]) -> Result<Tensor> {
    if let Some(&bad) = idx.iter().find(|&&i| i >= a.rows) {
        return shape_err("gather", format!("row {bad} of {}", a.rows));
    }
    let mut data = Vec::with_capacity(idx.len() * a.cols);
    for &i in idx {
        data.extend_from_slice(a.row(i));
    }
    Ok(Tensor {
        rows: idx.len(),
        cols: a.cols,
        data,
    })
}

/// `out[idx[r]] += a[r]` into an `n × cols` zero matrix.
pub fn scatter_add_rows(a: &Tensor, idx: &[usize], n: usize) -> Result<Tensor> {
    if idx.len() != a.rows {
        return shape_err("scatter_add", format!("{} indices for {} rows", idx.len(), a.rows));
    }
    if let Some(&bad) = idx.iter().find(|&&i| i >= n) {
        return shape_err("scatter_add", format!("target row {bad} of {n}"));
    }
    let mut out = Tensor::zeros(n, a.cols);
    for (r, &i) in idx.iter().enumerate() {
        let dst = &mut out.data[i * a.cols..(i + 1) * a.cols];
        for (x, y) in dst.iter_mut().zip(a.row(r)) {
            *x += y;
        }
    }
    Ok(out)
}

pub fn select_col(a: &Tensor, j: usize) -> Result<Tensor> {
    if j >= a.cols {
        return shape_err("select_col", format!("column {j} of {}", a.cols));
    }
    Ok(Tensor::column((0..a.rows).map(|i| a.get(i, j)).collect()))
}

/// Gaussian CDF through `erfc`, which avoids cancellation in the left tail.
fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * std::f64::consts::FRAC_1_SQRT_2)
}

/// Exact GELU, `x·Φ(x)`.
pub fn gelu(x: f64) -> f64 {
    x * normal_cdf(x)
}

pub fn gelu_derivative(x: f64) -> f64 {
    let cdf = normal_cdf(x);
    let pdf = (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
    cdf + x * pdf
}
