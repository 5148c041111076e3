//! Compressed sparse row storage for sector Hamiltonians.

use ndarray::prelude::*;

use crate::C64;

#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    dim: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<C64>,
}

impl SparseMatrix {
    /// Assemble row by row. `fill(row, &mut entries)` pushes `(col, value)`
    /// pairs; repeated columns are summed. Entries that cancel to zero are
    /// kept so that the sparsity pattern of a Hermitian operator stays symmetric.
    pub fn from_rows(dim: usize, mut fill: impl FnMut(usize, &mut Vec<(usize, C64)>)) -> Self {
        let mut indptr = Vec::with_capacity(dim + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        let mut row_buf = Vec::new();
        indptr.push(0);
        for row in 0..dim {
            row_buf.clear();
            fill(row, &mut row_buf);
            row_buf.sort_unstable_by_key(|&(c, _)| c);
            let mut k = 0;
            while k < row_buf.len() {
                let col = row_buf[k].0;
                let mut acc = C64::new(0.0, 0.0);
                while k < row_buf.len() && row_buf[k].0 == col {
                    acc += row_buf[k].1;
                    k += 1;
                }
                indices.push(col);
                values.push(acc);
            }
            indptr.push(indices.len());
        }
        Self { dim, indptr, indices, values }
    }

    /// Overwrite every entry below the diagonal with the conjugate of its
    /// mirror, making the matrix exactly Hermitian. Requires a symmetric
    /// sparsity pattern.
    pub fn hermitize_from_upper(&mut self) {
        for r in 0..self.dim {
            for k in self.indptr[r]..self.indptr[r + 1] {
                let c = self.indices[k];
                if c < r {
                    self.values[k] = self.get(c, r).conj();
                } else if c == r {
                    self.values[k] = C64::new(self.values[k].re, 0.0);
                }
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let range = self.indptr[r]..self.indptr[r + 1];
        self.indices[range.clone()].iter().copied().zip(self.values[range].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        let range = self.indptr[r]..self.indptr[r + 1];
        match self.indices[range.clone()].binary_search(&c) {
            Ok(k) => self.values[range.start + k],
            Err(_) => C64::new(0.0, 0.0),
        }
    }

    pub fn matvec_into(&self, x: &[C64], y: &mut [C64]) {
        for (r, out) in y.iter_mut().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for k in self.indptr[r]..self.indptr[r + 1] {
                acc += self.values[k] * x[self.indices[k]];
            }
            *out = acc;
        }
    }

    pub fn matvec(&self, x: &Array1<C64>) -> Array1<C64> {
        let x = x.as_standard_layout();
        let mut y = vec![C64::new(0.0, 0.0); self.dim];
        self.matvec_into(x.as_slice().expect("contiguous"), &mut y);
        Array1::from(y)
    }

    /// `max |H_ij - conj(H_ji)|` over stored entries.
    pub fn hermiticity_defect(&self) -> f64 {
        (0..self.dim)
            .flat_map(|r| self.row(r).map(move |(c, v)| (r, c, v)))
            .map(|(r, c, v)| (v - self.get(c, r).conj()).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_diagonal(&self) -> bool {
        (0..self.dim).all(|r| self.row(r).all(|(c, _)| c == r))
    }

    /// Rough bound on the spectral radius (largest absolute row sum).
    pub fn norm_bound(&self) -> f64 {
        (0..self.dim).map(|r| self.row(r).map(|(_, v)| v.norm()).sum::<f64>()).fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> Array2<C64> {
        let mut m = Array2::zeros((self.dim, self.dim));
        for r in 0..self.dim {
            for (c, v) in self.row(r) {
                m[[r, c]] = v;
            }
        }
        m
    }
}
