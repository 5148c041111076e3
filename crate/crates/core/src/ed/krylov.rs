//! Lanczos approximation of `exp(-i H dt) psi` for a Hermitian sparse `H`.

use ndarray::prelude::*;
use serde::{Deserialize, Serialize};

use super::sparse::SparseMatrix;
use crate::error::{EngineError, Result};
use crate::linalg::eigh;
use crate::C64;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KrylovOptions {
    pub tol: f64,
    pub m_max: usize,
}

impl Default for KrylovOptions {
    fn default() -> Self {
        Self { tol: 1e-12, m_max: 30 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KrylovInfo {
    /// Dimension of the subspace that was used.
    pub m: usize,
    pub error_estimate: f64,
    pub happy_breakdown: bool,
}

fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[C64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `exp(-i T dt) e_1` for the real tridiagonal `T` given by its diagonal and
/// off-diagonal.
fn small_propagator_column(alpha: &[f64], beta: &[f64], dt: f64) -> Result<Vec<C64>> {
    let m = alpha.len();
    let t = Array2::from_shape_fn((m, m), |(i, j)| {
        if i == j {
            C64::new(alpha[i], 0.0)
        } else if i + 1 == j {
            C64::new(beta[i], 0.0)
        } else if j + 1 == i {
            C64::new(beta[j], 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    let (w, v) = eigh(&t)?;
    Ok((0..m)
        .map(|i| (0..m).map(|k| v[[i, k]] * C64::new(0.0, -w[k] * dt).exp() * v[[0, k]].conj()).sum())
        .collect())
}

/// Lanczos with full reorthogonalization. The subspace grows until the
/// a posteriori estimate `beta_m |[exp(-i T_m dt)]_{m,1}|` drops below `tol`
/// or the recursion terminates exactly. The result is normalized to 1.
pub fn krylov_propagate(
    h: &SparseMatrix,
    psi: &Array1<C64>,
    dt: f64,
    opts: KrylovOptions,
) -> Result<(Array1<C64>, KrylovInfo)> {
    let psi = psi.as_standard_layout();
    let x = psi.as_slice().expect("contiguous");
    let beta0 = norm(x);
    if dt == 0.0 || beta0 == 0.0 {
        return Ok((psi.to_owned(), KrylovInfo { m: 0, error_estimate: 0.0, happy_breakdown: true }));
    }
    let dim = x.len();
    let scale = h.norm_bound().max(1.0);
    let mut basis: Vec<Vec<C64>> = vec![x.iter().map(|z| z / beta0).collect()];
    let mut alpha = Vec::new();
    let mut beta = Vec::new();
    let mut w = vec![C64::new(0.0, 0.0); dim];
    let mut estimate = f64::INFINITY;
    let mut happy = false;
    let mut y = Vec::new();
    for j in 0..opts.m_max.min(dim) {
        h.matvec_into(&basis[j], &mut w);
        alpha.push(inner(&basis[j], &w).re);
        for _ in 0..2 {
            for v in &basis {
                let c = inner(v, &w);
                w.iter_mut().zip(v).for_each(|(wi, vi)| *wi -= c * vi);
            }
        }
        let b = norm(&w);
        y = small_propagator_column(&alpha, &beta, dt)?;
        if b < 1e-13 * scale || j + 1 == dim {
            happy = true;
            estimate = 0.0;
            break;
        }
        estimate = b * y[j].norm();
        if estimate < opts.tol {
            break;
        }
        beta.push(b);
        basis.push(w.iter().map(|z| z / b).collect());
    }
    if estimate >= opts.tol {
        return Err(EngineError::NoConvergence { estimate, tol: opts.tol, m: alpha.len() });
    }
    let mut out = vec![C64::new(0.0, 0.0); dim];
    for (v, c) in basis.iter().zip(&y) {
        out.iter_mut().zip(v).for_each(|(o, vi)| *o += c * vi);
    }
    let n = norm(&out);
    out.iter_mut().for_each(|z| *z /= n);
    Ok((Array1::from(out), KrylovInfo { m: alpha.len(), error_estimate: estimate, happy_breakdown: happy }))
}
