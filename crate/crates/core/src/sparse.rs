//! Square sparse systems in triplet form, solved by sparse LU.

use faer::sparse::{SparseColMat, Triplet};
use faer::prelude::Solve;
use faer::Mat;

use crate::error::{Error, Result};

/// Square sparse matrix kept as (row, col, value) triplets. Duplicate
/// entries are summed on factorization.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    dim: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl SparseMatrix {
    pub fn new(dim: usize) -> Self {
        Self { dim, entries: Vec::new() }
    }

    pub fn with_capacity(dim: usize, nnz: usize) -> Self {
        Self {
            dim,
            entries: Vec::with_capacity(nnz),
        }
    }

    pub fn push(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(row < self.dim && col < self.dim);
        self.entries.push((row, col, value));
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim];
        for &(r, c, v) in &self.entries {
            y[r] += v * x[c];
        }
        y
    }

    /// Solves `A x = b` with a sparse LU factorization (partial pivoting).
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        assert_eq!(rhs.len(), self.dim);
        let triplets: Vec<Triplet<usize, usize, f64>> = self
            .entries
            .iter()
            .map(|&(r, c, v)| Triplet::new(r, c, v))
            .collect();
        let a = SparseColMat::<usize, f64>::try_new_from_triplets(self.dim, self.dim, &triplets)
            .map_err(|e| Error::SingularSystem(format!("matrix assembly failed: {e:?}")))?;
        let lu = a
            .sp_lu()
            .map_err(|e| Error::SingularSystem(format!("LU factorization failed: {e:?}")))?;
        let b = Mat::<f64>::from_fn(self.dim, 1, |i, _| rhs[i]);
        let x = lu.solve(&b);
        let out: Vec<f64> = (0..self.dim).map(|i| x[(i, 0)]).collect();
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::SingularSystem("solution contains non-finite values".into()));
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_nonsymmetric_system() {
        let mut a = SparseMatrix::new(3);
        for &(r, c, v) in &[(0, 0, 2.0), (0, 1, 1.0), (1, 0, -1.0), (1, 2, 3.0), (2, 1, 4.0), (2, 2, 1.0)] {
            a.push(r, c, v);
        }
        let x_true = [1.0, -2.0, 0.5];
        let b = a.mul_vec(&x_true);
        let x = a.solve(&b).unwrap();
        for (u, v) in x.iter().zip(&x_true) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn duplicates_are_summed() {
        let mut a = SparseMatrix::new(1);
        a.push(0, 0, 1.0);
        a.push(0, 0, 1.0);
        assert_eq!(a.solve(&[4.0]).unwrap(), vec![2.0]);
    }
}
