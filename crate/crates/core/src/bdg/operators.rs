use ndarray::prelude::*;

use crate::error::{EngineError, Result};
use crate::linalg::hermiticity_defect;
use crate::C64;

/// `O = sum_ij hop_ij c_i^dagger c_j + 1/2 sum_ij (pair_ij c_i^dagger c_j^dagger + h.c.) + constant`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticOperator {
    pub hop: Array2<C64>,
    pub pair: Array2<C64>,
    pub constant: f64,
}

impl QuadraticOperator {
    pub fn new(hop: Array2<C64>, pair: Array2<C64>, constant: f64) -> Result<Self> {
        let op = Self { hop, pair, constant };
        op.validate()?;
        Ok(op)
    }

    pub fn sites(&self) -> usize {
        self.hop.nrows()
    }

    pub fn validate(&self) -> Result<()> {
        let l = self.hop.nrows();
        if self.hop.shape() != [l, l] || self.pair.shape() != [l, l] {
            return Err(EngineError::InvalidParameter("hop and pair must be square and equal-sized".into()));
        }
        let defect = hermiticity_defect(&self.hop);
        if defect > 1e-12 {
            return Err(EngineError::NotHermitian(defect));
        }
        let anti = (&self.pair + &self.pair.t()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if anti > 1e-12 {
            return Err(EngineError::InvalidParameter(format!("pair is not antisymmetric ({anti:e})")));
        }
        Ok(())
    }

    /// `[[hop, pair], [-conj(pair), -hop^T]]`, so that
    /// `O = 1/2 Psi^dagger N Psi + const` with `Psi = (c, c^dagger)`.
    pub fn nambu(&self) -> Array2<C64> {
        let l = self.sites();
        let mut m = Array2::<C64>::zeros((2 * l, 2 * l));
        m.slice_mut(s![..l, ..l]).assign(&self.hop);
        m.slice_mut(s![..l, l..]).assign(&self.pair);
        m.slice_mut(s![l.., ..l]).assign(&self.pair.mapv(|z| -z.conj()));
        m.slice_mut(s![l.., l..]).assign(&self.hop.t().mapv(|z| -z));
        m
    }

    /// `<O>` from `G_ij = <c_i^dagger c_j>` and `F_ij = <c_i c_j>`.
    pub fn expectation(&self, g: &Array2<C64>, f: &Array2<C64>) -> f64 {
        let l = self.sites();
        let mut acc = self.constant;
        for a in 0..l {
            for b in 0..l {
                acc += (self.hop[[a, b]] * g[[a, b]]).re;
                acc += (self.pair[[a, b]] * f[[b, a]].conj()).re;
            }
        }
        acc
    }
}

/// `H = -sum_j [J (c_j^dagger c_{j+1} + c_j^dagger c_{j+1}^dagger + h.c.) + 2h n_j]`
/// on a ring of `l` sites.
pub fn build_kitaev(l: usize, j: f64, h: f64) -> Result<QuadraticOperator> {
    if l < 2 {
        return Err(EngineError::InvalidParameter(format!("Kitaev chain needs L >= 2, got {l}")));
    }
    let mut hop = Array2::<C64>::zeros((l, l));
    let mut pair = Array2::<C64>::zeros((l, l));
    for a in 0..l {
        let b = (a + 1) % l;
        hop[[a, a]] += -2.0 * h;
        hop[[a, b]] += -j;
        hop[[b, a]] += -j;
        pair[[a, b]] += -j;
        pair[[b, a]] += j;
    }
    QuadraticOperator::new(hop, pair, 0.0)
}

/// `n_site` as a quadratic operator.
pub fn number_operator(l: usize, site: usize) -> QuadraticOperator {
    let mut hop = Array2::<C64>::zeros((l, l));
    hop[[site, site]] = C64::new(1.0, 0.0);
    QuadraticOperator { hop, pair: Array2::zeros((l, l)), constant: 0.0 }
}

/// Power-law weights `f_ij = (1 + D_ij)^(-alpha) / N(alpha)` with ring
/// distance `D_ij` and Kac factor `N(alpha) = (L - 1)^(-1) sum_ij (1 + D_ij)^(-alpha)`.
#[derive(Clone, Debug, PartialEq)]
pub struct LongRangeKernel {
    pub f: Array2<f64>,
    pub alpha: f64,
    pub kac: f64,
}

pub fn ring_distance(l: usize, i: usize, j: usize) -> usize {
    let d = i.abs_diff(j);
    d.min(l - d)
}

pub fn kac_coefficients(l: usize, alpha: f64) -> Result<LongRangeKernel> {
    if !(alpha >= 0.0) {
        return Err(EngineError::InvalidParameter(format!("alpha must be >= 0, got {alpha}")));
    }
    if l < 2 {
        return Err(EngineError::InvalidParameter(format!("long-range kernel needs L >= 2, got {l}")));
    }
    let raw = Array2::from_shape_fn((l, l), |(i, j)| (1.0 + ring_distance(l, i, j) as f64).powf(-alpha));
    let kac = raw.sum() / (l - 1) as f64;
    Ok(LongRangeKernel { f: raw / kac, alpha, kac })
}

impl LongRangeKernel {
    pub fn sites(&self) -> usize {
        self.f.nrows()
    }

    /// `m_i = sum_j f_ij (c_i - c_i^dagger)(c_j + c_j^dagger)`.
    pub fn measured_operator(&self, i: usize) -> QuadraticOperator {
        let l = self.sites();
        let mut hop = Array2::<C64>::zeros((l, l));
        let mut pair = Array2::<C64>::zeros((l, l));
        for j in 0..l {
            let fij = self.f[[i, j]];
            hop[[i, j]] -= fij;
            hop[[j, i]] -= fij;
            if j != i {
                pair[[i, j]] -= fij;
                pair[[j, i]] += fij;
            }
        }
        QuadraticOperator { hop, pair, constant: self.f[[i, i]] }
    }

    /// `<m_i> = f_ii + 2 sum_j f_ij Re(F_ij - G_ij)` for every `i`.
    pub fn expectations(&self, g: &Array2<C64>, f: &Array2<C64>) -> Vec<f64> {
        let l = self.sites();
        (0..l)
            .map(|i| {
                let s: f64 = (0..l).map(|j| self.f[[i, j]] * (f[[i, j]] - g[[i, j]]).re).sum();
                self.f[[i, i]] + 2.0 * s
            })
            .collect()
    }

    /// `p_i = sum_j f_ij^2`, the constant in `m_i^2 = p_i`.
    pub fn squares(&self) -> Vec<f64> {
        self.f.rows().into_iter().map(|r| r.iter().map(|x| x * x).sum()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::eigvalsh;

    #[test]
    fn kitaev_structure() {
        let op = build_kitaev(5, 0.0, 0.7).unwrap();
        for a in 0..5 {
            for b in 0..5 {
                let e = if a == b { -1.4 } else { 0.0 };
                assert_eq!(op.hop[[a, b]].re, e);
                assert_eq!(op.pair[[a, b]].norm(), 0.0);
            }
        }
        let op = build_kitaev(4, 1.0, 0.0).unwrap();
        for a in 0..4 {
            for b in 0..4 {
                let p = op.pair[[a, b]].re;
                if (a + 1) % 4 == b {
                    assert_eq!(p, -1.0);
                } else if (b + 1) % 4 == a {
                    assert_eq!(p, 1.0);
                } else {
                    assert_eq!(p, 0.0);
                }
            }
        }
    }

    #[test]
    fn nambu_spectrum_is_particle_hole_symmetric() {
        let op = build_kitaev(7, 1.0, 0.3).unwrap();
        let ev = eigvalsh(&op.nambu()).unwrap();
        let n = ev.len();
        for k in 0..n {
            assert!((ev[k] + ev[n - 1 - k]).abs() < 1e-12);
        }
    }

    #[test]
    fn nambu_of_identity_hopping() {
        let op = QuadraticOperator::new(Array2::eye(3), Array2::zeros((3, 3)), 0.0).unwrap();
        let m = op.nambu();
        for k in 0..6 {
            assert_eq!(m[[k, k]].re, if k < 3 { 1.0 } else { -1.0 });
        }
        // Particle-hole symmetry: tau_x conj(N) tau_x = -N.
        let op = build_kitaev(4, 0.8, 0.25).unwrap();
        let m = op.nambu();
        let swapped = Array2::from_shape_fn((8, 8), |(a, b)| m[[(a + 4) % 8, (b + 4) % 8]].conj());
        assert!((&swapped + &m).iter().all(|z| z.norm() < 1e-15));
    }

    #[test]
    fn kac_factor_matches_direct_double_sum() {
        let k = kac_coefficients(6, 2.0).unwrap();
        let mut total = 0.0;
        for i in 0..6 {
            for j in 0..6 {
                total += (1.0 + ring_distance(6, i, j) as f64).powi(-2);
            }
        }
        assert!((k.kac - total / 5.0).abs() < 1e-14);
        let flat = kac_coefficients(6, 0.0).unwrap();
        assert!(flat.f.iter().all(|&x| (x - 5.0 / 36.0).abs() < 1e-15));
        let steep = kac_coefficients(8, 40.0).unwrap();
        assert!(steep.f[[0, 1]] < 1e-10 * steep.f[[0, 0]]);
        for i in 0..8 {
            for j in 0..8 {
                assert_eq!(steep.f[[i, j]], steep.f[[j, i]]);
            }
        }
    }

    #[test]
    fn measured_operator_is_valid() {
        let k = kac_coefficients(5, 1.0).unwrap();
        for i in 0..5 {
            k.measured_operator(i).validate().unwrap();
        }
    }
}
