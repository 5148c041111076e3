//! Tight-binding chain with onsite dephasing, evolved as a Slater determinant.
//!
//! The state `prod_k (sum_j U_jk c_j^dagger) |0>` is stored as the `L x N`
//! isometry `U`. The hopping factor acts as `U <- exp(-i h dt) U`; the
//! dephasing factor scales row `j` by `exp(alpha_j)` and a QR decomposition
//! restores orthonormal columns without changing the state.

use ndarray::prelude::*;
use ndarray::s;

use crate::error::{EngineError, Result};
use crate::linalg::{isometry_defect, orthonormalize_columns};
use crate::observables::{check_subsystem, u1_entropy};
use crate::trajectory::{Observable, TrajectoryEngine};
use crate::C64;

pub const ISOMETRY_TOLERANCE: f64 = 1e-10;

/// `H = -(J/2) sum_j (c_j^dagger c_{j+1} + h.c.)` on a ring of `l` sites.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HoppingHamiltonian {
    pub j: f64,
    pub l: usize,
}

impl HoppingHamiltonian {
    pub fn new(j: f64, l: usize) -> Self {
        Self { j, l }
    }

    /// Single-particle matrix `h` with `H = sum_ij h_ij c_i^dagger c_j`.
    /// For `l = 2` both bonds connect the same pair and add up.
    pub fn matrix(&self) -> Array2<C64> {
        let l = self.l;
        let mut h = Array2::<C64>::zeros((l, l));
        if l < 2 {
            return h;
        }
        for a in 0..l {
            let b = (a + 1) % l;
            h[[a, b]] += -0.5 * self.j;
            h[[b, a]] += -0.5 * self.j;
        }
        h
    }

    /// Single-particle levels `-J cos k`, `k = 2 pi n / l` (`l >= 2`).
    pub fn levels(&self) -> Vec<f64> {
        let l = self.l as f64;
        (0..self.l)
            .map(|n| -self.j * (2.0 * std::f64::consts::PI * n as f64 / l).cos())
            .collect()
    }

    /// `exp(-i h dt)` assembled from the plane-wave eigenbasis of the
    /// circulant `h`; the result is itself circulant.
    pub fn propagator(&self, dt: f64) -> Array2<C64> {
        let l = self.l;
        if l < 2 {
            return Array2::eye(l);
        }
        let phases: Vec<C64> = self.levels().iter().map(|e| C64::new(0.0, -e * dt).exp()).collect();
        let two_pi = 2.0 * std::f64::consts::PI / l as f64;
        let row: Vec<C64> = (0..l)
            .map(|d| {
                let mut acc = C64::new(0.0, 0.0);
                for (n, p) in phases.iter().enumerate() {
                    acc += p * C64::from_polar(1.0, two_pi * (n * d) as f64);
                }
                acc / l as f64
            })
            .collect();
        Array2::from_shape_fn((l, l), |(a, b)| row[(a + l - b) % l])
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SlaterState {
    orbitals: Array2<C64>,
}

impl SlaterState {
    /// Neel state `c_2^dagger c_4^dagger ... |0>` (1-based sites), i.e. the
    /// 0-based odd sites are filled.
    pub fn neel(l: usize) -> Result<Self> {
        if l % 2 != 0 || l == 0 {
            return Err(EngineError::OddSize(l));
        }
        let mut u = Array2::<C64>::zeros((l, l / 2));
        for k in 0..l / 2 {
            u[[2 * k + 1, k]] = C64::new(1.0, 0.0);
        }
        Ok(Self { orbitals: u })
    }

    /// Wrap an arbitrary full-rank `L x N` matrix, orthonormalizing its columns.
    pub fn from_orbitals(mut orbitals: Array2<C64>) -> Result<Self> {
        orthonormalize_columns(&mut orbitals)?;
        Ok(Self { orbitals })
    }

    pub fn orbitals(&self) -> &Array2<C64> {
        &self.orbitals
    }

    pub fn sites(&self) -> usize {
        self.orbitals.nrows()
    }

    pub fn particles(&self) -> usize {
        self.orbitals.ncols()
    }

    /// `D_ij = <c_i^dagger c_j> = sum_k conj(U_ik) U_jk`.
    pub fn correlation_matrix(&self) -> Array2<C64> {
        self.correlation_block(self.sites())
    }

    /// Leading `ell x ell` block of the correlation matrix.
    pub fn correlation_block(&self, ell: usize) -> Array2<C64> {
        let a = self.orbitals.slice(s![..ell, ..]);
        let conj_a = a.mapv(|z| z.conj());
        conj_a.dot(&a.t())
    }

    pub fn occupations(&self) -> Vec<f64> {
        self.orbitals
            .rows()
            .into_iter()
            .map(|r| r.iter().map(|z| z.norm_sqr()).sum())
            .collect()
    }

    pub fn unitary_step(&mut self, propagator: &Array2<C64>) {
        self.orbitals = propagator.dot(&self.orbitals);
    }

    /// Dephasing back-action with `alpha_j = dW_j + (2 <n_j> - 1) gamma dt`,
    /// where `<n_j>` is read from `reference` occupations.
    pub fn measurement_step(&mut self, increments: &[f64], reference: &[f64], gamma: f64, dt: f64) -> Result<()> {
        if gamma == 0.0 && increments.iter().all(|&x| x == 0.0) {
            return Ok(());
        }
        for (j, mut row) in self.orbitals.rows_mut().into_iter().enumerate() {
            let alpha = increments[j] + (2.0 * reference[j] - 1.0) * gamma * dt;
            let w = alpha.exp();
            row.mapv_inplace(|z| z * w);
        }
        orthonormalize_columns(&mut self.orbitals)?;
        let defect = isometry_defect(&self.orbitals);
        if defect > ISOMETRY_TOLERANCE {
            return Err(EngineError::NumericalBreakdown(format!("isometry defect {defect:e} after QR")));
        }
        Ok(())
    }
}

/// Trajectory engine for the tight-binding chain with onsite dephasing.
#[derive(Clone, Debug)]
pub struct SlaterEngine {
    state: SlaterState,
    hamiltonian: HoppingHamiltonian,
    gamma: f64,
    cached: Option<(f64, Array2<C64>)>,
}

impl SlaterEngine {
    pub fn new(state: SlaterState, j: f64, gamma: f64) -> Self {
        let l = state.sites();
        Self { state, hamiltonian: HoppingHamiltonian::new(j, l), gamma, cached: None }
    }

    pub fn neel(l: usize, j: f64, gamma: f64) -> Result<Self> {
        Ok(Self::new(SlaterState::neel(l)?, j, gamma))
    }

    pub fn state(&self) -> &SlaterState {
        &self.state
    }

    fn propagator(&mut self, dt: f64) -> &Array2<C64> {
        let stale = !matches!(&self.cached, Some((cdt, _)) if *cdt == dt);
        if stale {
            self.cached = Some((dt, self.hamiltonian.propagator(dt)));
        }
        &self.cached.as_ref().unwrap().1
    }
}

impl TrajectoryEngine for SlaterEngine {
    fn noise_channels(&self) -> usize {
        self.state.sites()
    }

    fn gamma(&self) -> f64 {
        self.gamma
    }

    fn step(&mut self, increments: &[f64], dt: f64) -> Result<()> {
        let reference = self.state.occupations();
        let gamma = self.gamma;
        if self.hamiltonian.j != 0.0 {
            let p = self.propagator(dt).clone();
            self.state.unitary_step(&p);
        }
        self.state.measurement_step(increments, &reference, gamma, dt)
    }

    fn observe(&self, observable: &Observable) -> Result<f64> {
        match *observable {
            Observable::Entropy { ell } => {
                check_subsystem(self.state.sites(), ell)?;
                u1_entropy(&self.state.correlation_block(ell), ell)
            }
            Observable::Occupation { site } => self
                .state
                .occupations()
                .get(site)
                .copied()
                .ok_or_else(|| EngineError::InvalidParameter(format!("site {site} out of range"))),
            _ => Err(EngineError::UnsupportedObservable(observable.to_string())),
        }
    }

    fn check_invariants(&self) -> Result<()> {
        let defect = isometry_defect(&self.state.orbitals);
        if defect > ISOMETRY_TOLERANCE {
            return Err(EngineError::NumericalBreakdown(format!("isometry defect {defect:e}")));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{expm_hermitian, hermiticity_defect};

    #[test]
    fn neel_layout() {
        assert!(matches!(SlaterState::neel(5), Err(EngineError::OddSize(5))));
        let s = SlaterState::neel(2).unwrap();
        assert_eq!(s.occupations(), vec![0.0, 1.0]);
        let d = SlaterState::neel(4).unwrap().correlation_matrix();
        let expect = [0.0, 1.0, 0.0, 1.0];
        for i in 0..4 {
            for j in 0..4 {
                let e = if i == j { expect[i] } else { 0.0 };
                assert!((d[[i, j]] - e).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn circulant_propagator_matches_dense_exponential() {
        for l in [2, 3, 4, 7, 10] {
            let h = HoppingHamiltonian::new(1.3, l);
            assert!(hermiticity_defect(&h.matrix()) == 0.0);
            let dense = expm_hermitian(&h.matrix(), C64::new(0.0, -0.37)).unwrap();
            let fast = h.propagator(0.37);
            let err = (&dense - &fast).iter().map(|z| z.norm()).fold(0.0, f64::max);
            assert!(err < 1e-13, "L = {l}: {err:e}");
        }
    }

    #[test]
    fn neel_is_a_fixed_point_of_dephasing() {
        let mut s = SlaterState::neel(6).unwrap();
        let before = s.correlation_matrix();
        let occ = s.occupations();
        s.measurement_step(&[0.3, -0.2, 0.1, 0.05, -0.4, 0.2], &occ, 1.0, 0.01).unwrap();
        let after = s.correlation_matrix();
        assert!((&before - &after).iter().all(|z| z.norm() < 1e-14));
    }

    #[test]
    fn zero_rate_and_zero_hopping_freeze_the_state() {
        let mut e = SlaterEngine::neel(8, 0.0, 0.0).unwrap();
        let before = e.state().orbitals().clone();
        e.step(&[0.0; 8], 0.01).unwrap();
        assert_eq!(&before, e.state().orbitals());
    }
}
