//! Observables and non-unitary factors on sector statevectors.

use ndarray::prelude::*;
use ndarray_linalg::SVD;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use super::basis::{class_ranks, SectorBasis};
use crate::error::{EngineError, Result};
use crate::observables::check_subsystem;
use crate::C64;

pub fn normalize(psi: &mut Array1<C64>) -> Result<()> {
    let n = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if !(n > 0.0 && n.is_finite()) {
        return Err(EngineError::NumericalBreakdown(format!("state norm {n}")));
    }
    psi.mapv_inplace(|z| z / n);
    Ok(())
}

/// `<n_j>` for every site.
pub fn occupations(psi: &Array1<C64>, basis: &SectorBasis) -> Vec<f64> {
    let mut occ = vec![0.0; basis.sites()];
    for (amp, &c) in psi.iter().zip(basis.configs()) {
        let p = amp.norm_sqr();
        for (j, o) in occ.iter_mut().enumerate() {
            if c >> j & 1 == 1 {
                *o += p;
            }
        }
    }
    occ
}

/// Multiply each amplitude by `exp(sum_j alpha_j n_j)` with
/// `alpha_j = dW_j + (2 <n_j> - 1) gamma dt` and renormalize. `<n_j>` is
/// read from `reference`.
pub fn dephasing_step(
    psi: &mut Array1<C64>,
    basis: &SectorBasis,
    increments: &[f64],
    reference: &[f64],
    gamma: f64,
    dt: f64,
) -> Result<()> {
    if gamma == 0.0 && increments.iter().all(|&x| x == 0.0) {
        return Ok(());
    }
    let alpha: Vec<f64> =
        increments.iter().zip(reference).map(|(dw, n)| dw + (2.0 * n - 1.0) * gamma * dt).collect();
    // Shifting every exponent by the same amount only rescales the state.
    let shift = alpha.iter().filter(|a| **a > 0.0).sum::<f64>();
    for (amp, &c) in psi.iter_mut().zip(basis.configs()) {
        let e: f64 = alpha.iter().enumerate().filter(|(j, _)| c >> j & 1 == 1).map(|(_, a)| a).sum();
        *amp *= (e - shift).exp();
    }
    normalize(psi)
}

/// Von Neumann entropy of sites `0..ell`.
///
/// Each configuration splits into a low part on `A` and a high part on `B`.
/// Grouping by the particle number of `A` turns `psi` into one small matrix
/// per block, whose squared singular values are the Schmidt weights.
pub fn entanglement_entropy(psi: &Array1<C64>, basis: &SectorBasis, ell: usize) -> Result<f64> {
    let l = basis.sites();
    check_subsystem(l, ell)?;
    let n = basis.particles();
    let lb = l - ell;
    let ra = class_ranks(ell);
    let rb = class_ranks(lb);
    let mask = (1u64 << ell) - 1;
    let mut blocks: Vec<Option<Array2<C64>>> = vec![None; n + 1];
    for (amp, &c) in psi.iter().zip(basis.configs()) {
        let (a, b) = (c & mask, c >> ell);
        let na = a.count_ones() as usize;
        let m = blocks[na].get_or_insert_with(|| {
            Array2::zeros((super::basis::binomial(ell, na), super::basis::binomial(lb, n - na)))
        });
        m[[ra[a as usize] as usize, rb[b as usize] as usize]] = *amp;
    }
    let mut s = 0.0;
    for m in blocks.into_iter().flatten() {
        let (_, sv, _) = m.svd(false, false)?;
        for x in sv.iter() {
            let p = x * x;
            if p > 0.0 {
                s -= p * p.ln();
            }
        }
    }
    Ok(s)
}

/// Inverse participation ratio `sum |psi_c|^4`.
pub fn ipr(psi: &Array1<C64>) -> f64 {
    psi.iter().map(|z| z.norm_sqr().powi(2)).sum()
}

/// Mean and sample standard deviation of the half-chain entropy of
/// equal-amplitude states with independent uniform phases on the sector.
/// Sample `s` uses its own ChaCha20 stream, so results do not depend on
/// `n_samples` ordering.
pub fn page_reference(l: usize, n_samples: usize, seed: u64) -> Result<(f64, f64)> {
    let basis = SectorBasis::half_filling(l)?;
    if n_samples == 0 {
        return Err(EngineError::InvalidParameter("need at least one sample".into()));
    }
    let amp = 1.0 / (basis.dim() as f64).sqrt();
    let values = (0..n_samples)
        .map(|s| {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            rng.set_stream(s as u64);
            let psi: Array1<C64> = (0..basis.dim())
                .map(|_| C64::from_polar(amp, rng.random_range(0.0..std::f64::consts::TAU)))
                .collect();
            entanglement_entropy(&psi, &basis, l / 2)
        })
        .collect::<Result<Vec<f64>>>()?;
    let mean = values.iter().sum::<f64>() / n_samples as f64;
    let sd = if n_samples > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n_samples - 1) as f64).sqrt()
    } else {
        0.0
    };
    Ok((mean, sd))
}
