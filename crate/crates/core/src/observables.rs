//! Entanglement entropy of Gaussian states from correlation spectra.

use ndarray::prelude::*;
use ndarray::s;
use serde::{Deserialize, Serialize};

use crate::error::{EngineError, Result};
use crate::linalg::{eigvalsh, hermiticity_defect};
use crate::C64;

/// Eigenvalues within this distance of `[0, 1]` are clamped; anything
/// further out is reported as an error.
pub const SPECTRUM_TOLERANCE: f64 = 1e-9;

/// Input matrices with a larger Hermiticity defect are rejected.
pub const HERMITICITY_TOLERANCE: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumKind {
    /// Eigenvalues of the `l x l` block of `<c_i^dagger c_j>`.
    U1Restricted,
    /// Eigenvalues of the `2l x 2l` Nambu block; they come in `(x, 1 - x)`
    /// pairs, so every mode is counted twice.
    NambuRestricted,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationSpectrum {
    pub eigenvalues: Vec<f64>,
    pub kind: SpectrumKind,
}

impl CorrelationSpectrum {
    /// Clamp raw eigenvalues into `[0, 1]`.
    pub fn new(raw: impl IntoIterator<Item = f64>, kind: SpectrumKind) -> Result<Self> {
        let eigenvalues = raw
            .into_iter()
            .map(|x| {
                if !(-SPECTRUM_TOLERANCE..=1.0 + SPECTRUM_TOLERANCE).contains(&x) {
                    Err(EngineError::SpectrumOutOfRange(x))
                } else {
                    Ok(x.clamp(0.0, 1.0))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { eigenvalues, kind })
    }
}

/// Binary entropy `-x ln x - (1 - x) ln(1 - x)` with `0 ln 0 = 0`.
pub fn entropy_kernel(x: f64) -> f64 {
    let h = |p: f64| if p <= 0.0 { 0.0 } else { -p * p.ln() };
    h(x) + h(1.0 - x)
}

pub fn entropy_from_spectrum(spec: &CorrelationSpectrum) -> f64 {
    let total: f64 = spec.eigenvalues.iter().map(|&x| entropy_kernel(x)).sum();
    match spec.kind {
        SpectrumKind::U1Restricted => total,
        SpectrumKind::NambuRestricted => 0.5 * total,
    }
}

/// Spectrum of the leading `ell x ell` block of a U(1) correlation matrix.
pub fn restrict_u1(d: &Array2<C64>, ell: usize) -> Result<CorrelationSpectrum> {
    check_partition(d.nrows(), ell)?;
    let defect = hermiticity_defect(d);
    if defect > HERMITICITY_TOLERANCE {
        return Err(EngineError::NotHermitian(defect));
    }
    let block = d.slice(s![..ell, ..ell]).to_owned();
    CorrelationSpectrum::new(eigvalsh(&block)?, SpectrumKind::U1Restricted)
}

/// The `2l x 2l` Nambu correlation `<Psi Psi^dagger>` of the first `ell`
/// sites, `Psi = (c_1..c_l, c_1^dagger..c_l^dagger)`, built from
/// `G_ij = <c_i^dagger c_j>` and `F_ij = <c_i c_j>`.
pub fn nambu_block(g: &Array2<C64>, f: &Array2<C64>, ell: usize) -> Array2<C64> {
    let mut m = Array2::<C64>::zeros((2 * ell, 2 * ell));
    for i in 0..ell {
        for j in 0..ell {
            let delta = if i == j { 1.0 } else { 0.0 };
            m[[i, j]] = C64::new(delta, 0.0) - g[[j, i]];
            m[[i, ell + j]] = f[[i, j]];
            m[[ell + i, j]] = f[[j, i]].conj();
            m[[ell + i, ell + j]] = g[[i, j]];
        }
    }
    m
}

pub fn restrict_nambu(g: &Array2<C64>, f: &Array2<C64>, ell: usize) -> Result<CorrelationSpectrum> {
    check_partition(g.nrows(), ell)?;
    let block = nambu_block(g, f, ell);
    let defect = hermiticity_defect(&block);
    if defect > HERMITICITY_TOLERANCE {
        return Err(EngineError::NotHermitian(defect));
    }
    CorrelationSpectrum::new(eigvalsh(&block)?, SpectrumKind::NambuRestricted)
}

/// Entanglement entropy of sites `0..ell` of a number-conserving Gaussian state.
pub fn u1_entropy(d: &Array2<C64>, ell: usize) -> Result<f64> {
    Ok(entropy_from_spectrum(&restrict_u1(d, ell)?))
}

/// Entanglement entropy of sites `0..ell` of a Gaussian state with pairing.
pub fn nambu_entropy(g: &Array2<C64>, f: &Array2<C64>, ell: usize) -> Result<f64> {
    Ok(entropy_from_spectrum(&restrict_nambu(g, f, ell)?))
}

/// Reject subsystem sizes outside `1..l` for a chain of `l` sites.
pub fn check_subsystem(l: usize, ell: usize) -> Result<()> {
    if ell == 0 || ell >= l {
        return Err(EngineError::InvalidParameter(format!("subsystem size {ell} must lie in 1..{l}")));
    }
    Ok(())
}

/// `ell` may equal the matrix size when a pre-restricted block is passed.
fn check_partition(n: usize, ell: usize) -> Result<()> {
    if ell == 0 || ell > n {
        return Err(EngineError::InvalidParameter(format!(
            "subsystem size {ell} must lie in 1..={n}"
        )));
    }
    Ok(())
}
