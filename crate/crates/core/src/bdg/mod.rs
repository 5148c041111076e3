//! Kitaev chain with onsite dephasing or long-range dissipators, evolved as a
//! Bogoliubov frame.
//!
//! The pure Gaussian state is the common vacuum of
//! `gamma_k = sum_j (conj(U_jk) c_j + conj(V_jk) c_j^dagger)`. The stacked
//! `2L x L` frame `X = [U; V]` has orthonormal columns. A quadratic
//! exponential `exp(1/2 Psi^dagger M Psi)` maps the frame to `exp(-M) X`,
//! after which a QR decomposition restores orthonormality without changing
//! the state (nor `Z = -(U^dagger)^-1 V^dagger`).

mod operators;

pub use operators::{
    build_kitaev, kac_coefficients, number_operator, ring_distance, LongRangeKernel, QuadraticOperator,
};

use ndarray::prelude::*;
use ndarray_linalg::{Inverse, SVD};

use crate::error::{EngineError, Result};
use crate::linalg::{dagger, expm_hermitian, isometry_defect, orthonormalize_columns, pfaffian};
use crate::observables::{check_subsystem, nambu_entropy};
use crate::trajectory::{Observable, TrajectoryEngine};
use crate::C64;

pub const UNITARITY_TOLERANCE: f64 = 1e-9;
pub const PARITY_TOLERANCE: f64 = 1e-6;
/// Steps between `Z` consistency checks in builds with debug assertions.
pub const Z_CHECK_INTERVAL: u64 = 100;

#[derive(Clone, Debug, PartialEq)]
pub struct BdgState {
    frame: Array2<C64>,
}

impl BdgState {
    /// Fermion vacuum: `U = 1`, `V = 0`.
    pub fn vacuum(l: usize) -> Self {
        let mut frame = Array2::<C64>::zeros((2 * l, l));
        for k in 0..l {
            frame[[k, k]] = C64::new(1.0, 0.0);
        }
        Self { frame }
    }

    /// Neel state with the 0-based odd sites filled.
    pub fn neel(l: usize) -> Result<Self> {
        if l % 2 != 0 || l == 0 {
            return Err(EngineError::OddSize(l));
        }
        let mut frame = Array2::<C64>::zeros((2 * l, l));
        for k in 0..l {
            let row = if k % 2 == 1 { l + k } else { k };
            frame[[row, k]] = C64::new(1.0, 0.0);
        }
        Ok(Self { frame })
    }

    /// Build from `U`, `V`, orthonormalizing the stacked frame.
    pub fn from_blocks(u: &Array2<C64>, v: &Array2<C64>) -> Result<Self> {
        let l = u.nrows();
        if u.shape() != [l, l] || v.shape() != [l, l] {
            return Err(EngineError::InvalidParameter("U and V must be square and equal-sized".into()));
        }
        let mut frame = Array2::<C64>::zeros((2 * l, l));
        frame.slice_mut(s![..l, ..]).assign(u);
        frame.slice_mut(s![l.., ..]).assign(v);
        orthonormalize_columns(&mut frame)?;
        Ok(Self { frame })
    }

    pub fn sites(&self) -> usize {
        self.frame.ncols()
    }

    pub fn frame(&self) -> &Array2<C64> {
        &self.frame
    }

    pub fn u(&self) -> ArrayView2<'_, C64> {
        self.frame.slice(s![..self.sites(), ..])
    }

    pub fn v(&self) -> ArrayView2<'_, C64> {
        self.frame.slice(s![self.sites().., ..])
    }

    /// `G = V V^dagger` (`G_ij = <c_i^dagger c_j>`) and `F = U V^dagger` (`F_ij = <c_i c_j>`).
    pub fn pair_correlations(&self) -> (Array2<C64>, Array2<C64>) {
        self.leading_correlations(self.sites())
    }

    /// `G` and `F` restricted to the first `ell` sites.
    pub fn leading_correlations(&self, ell: usize) -> (Array2<C64>, Array2<C64>) {
        let l = self.sites();
        let u = self.frame.slice(s![..ell, ..]);
        let v = self.frame.slice(s![l..l + ell, ..]);
        let vd = v.t().mapv(|z| z.conj());
        (v.dot(&vd), u.dot(&vd))
    }

    pub fn occupations(&self) -> Vec<f64> {
        self.v().rows().into_iter().map(|r| r.iter().map(|z| z.norm_sqr()).sum()).collect()
    }

    /// `max |U^dagger U + V^dagger V - 1|`.
    pub fn unitarity_defect(&self) -> f64 {
        isometry_defect(&self.frame)
    }

    /// `<(-1)^N>` as the Pfaffian of the Majorana covariance
    /// `Gamma_kl = -i <w_k w_l>` (`k != l`), Majoranas ordered
    /// `(a_1, b_1, a_2, b_2, ...)` with `a = c + c^dagger`, `b = i(c^dagger - c)`.
    pub fn parity(&self) -> f64 {
        let l = self.sites();
        let (g, f) = self.pair_correlations();
        let one = C64::new(1.0, 0.0);
        let i = C64::new(0.0, 1.0);
        let mut gamma = Array2::<C64>::zeros((2 * l, 2 * l));
        for p in 0..l {
            for q in 0..l {
                let delta = if p == q { one } else { C64::new(0.0, 0.0) };
                let cc_dag = delta - g[[q, p]]; // <c_p c_q^dagger>
                let cdag_c = g[[p, q]];
                let cc = f[[p, q]];
                let cdag_cdag = f[[q, p]].conj();
                // a = c + c^dagger, b = -i c + i c^dagger
                let aa = cc + cc_dag + cdag_c + cdag_cdag;
                let ab = i * (-cc + cc_dag - cdag_c + cdag_cdag);
                let ba = i * (-cc - cc_dag + cdag_c + cdag_cdag);
                let bb = -cc + cc_dag + cdag_c - cdag_cdag;
                let entries = [(0, 0, aa), (0, 1, ab), (1, 0, ba), (1, 1, bb)];
                for (x, y, val) in entries {
                    let (r, c) = (2 * p + x, 2 * q + y);
                    if r != c {
                        gamma[[r, c]] = -i * val;
                    }
                }
            }
        }
        pfaffian(&gamma).re
    }

    /// `Z = -(U^dagger)^-1 V^dagger`, or `None` when `U` is numerically singular.
    pub fn z_matrix(&self) -> Option<Array2<C64>> {
        let ud = dagger(&self.u().to_owned());
        let inv = ud.inv().ok()?;
        let z = -inv.dot(&dagger(&self.v().to_owned()));
        if z.iter().all(|x| x.is_finite()) && z.iter().map(|x| x.norm()).fold(0.0, f64::max) < 1e6 {
            Some(z)
        } else {
            None
        }
    }

    /// `X <- P X` for a precomputed Bogoliubov propagator `P`.
    pub fn unitary_step(&mut self, propagator: &Array2<C64>) {
        self.frame = propagator.dot(&self.frame);
    }

    /// Apply `exp(sum_j alpha_j n_j)` with `alpha_j = dW_j + (2 <n_j> - 1) gamma dt`,
    /// `<n_j>` taken from `reference`.
    pub fn measurement_step_onsite(
        &mut self,
        increments: &[f64],
        reference: &[f64],
        gamma: f64,
        dt: f64,
    ) -> Result<()> {
        let l = self.sites();
        let alpha: Vec<f64> =
            (0..l).map(|j| increments[j] + (2.0 * reference[j] - 1.0) * gamma * dt).collect();
        self.apply_onsite_exponential(&alpha)?;
        Ok(())
    }

    /// Apply `exp(sum_j alpha_j n_j)` and re-orthonormalize.
    pub fn apply_onsite_exponential(&mut self, alpha: &[f64]) -> Result<()> {
        if alpha.iter().all(|&a| a == 0.0) {
            return Ok(());
        }
        self.scale_onsite(alpha);
        self.reorthonormalize(false)
    }

    fn scale_onsite(&mut self, alpha: &[f64]) {
        let l = self.sites();
        for (j, &a) in alpha.iter().enumerate() {
            let (down, up) = ((-a).exp(), a.exp());
            self.frame.row_mut(j).mapv_inplace(|z| z * down);
            self.frame.row_mut(l + j).mapv_inplace(|z| z * up);
        }
    }

    /// Apply `exp(sum_i alpha_i m_i)` for the long-range operators with
    /// `alpha_i = dW_i + 2 <m_i> gamma dt`, `<m_i>` taken from `reference`.
    pub fn measurement_step_longrange(
        &mut self,
        increments: &[f64],
        kernel: &LongRangeKernel,
        reference: &[f64],
        gamma: f64,
        dt: f64,
    ) -> Result<()> {
        let alpha: Vec<f64> =
            (0..self.sites()).map(|i| increments[i] + 2.0 * reference[i] * gamma * dt).collect();
        self.apply_longrange_exponential(kernel, &alpha)
    }

    /// Apply `exp(sum_i alpha_i m_i)` and re-orthonormalize.
    ///
    /// With Majoranas `a_j = c_j + c_j^dagger`, `b_j = i(c_j^dagger - c_j)` the
    /// generator is `i sum_ij M_ij b_i a_j`, `M_ij = alpha_i f_ij`. The real SVD
    /// `M = P S Q^T` splits it into commuting pairs `i s_k b'_k a'_k`, each of
    /// which rotates `(a'_k, b'_k)` by a hyperbolic angle `2 s_k`.
    pub fn apply_longrange_exponential(&mut self, kernel: &LongRangeKernel, alpha: &[f64]) -> Result<()> {
        if alpha.iter().all(|&a| a == 0.0) {
            return Ok(());
        }
        self.rotate_longrange(kernel, alpha)?;
        self.reorthonormalize(false)
    }

    fn rotate_longrange(&mut self, kernel: &LongRangeKernel, alpha: &[f64]) -> Result<()> {
        let l = self.sites();
        let m = Array2::from_shape_fn((l, l), |(i, j)| alpha[i] * kernel.f[[i, j]]);
        let (p, sigma, qt) = m.svd(true, true)?;
        let (p, qt) = (p.expect("left vectors requested"), qt.expect("right vectors requested"));
        let p = p.mapv(|x| C64::new(x, 0.0));
        let q = qt.t().mapv(|x| C64::new(x, 0.0));
        let half = C64::new(0.5, 0.0);
        let i = C64::new(0.0, 1.0);
        let u = self.u().to_owned();
        let v = self.v().to_owned();
        let y1 = (&u + &v) * half;
        let y2 = (&v - &u) * (i * half);
        let qy1 = q.t().dot(&y1);
        let py2 = p.t().dot(&y2);
        let mut t1 = Array2::<C64>::zeros((l, l));
        let mut t2 = Array2::<C64>::zeros((l, l));
        for k in 0..l {
            let (c, s) = ((2.0 * sigma[k]).cosh(), (2.0 * sigma[k]).sinh());
            for col in 0..l {
                let (a, b) = (qy1[[k, col]], py2[[k, col]]);
                t1[[k, col]] = a * c + i * b * s;
                t2[[k, col]] = -i * a * s + b * c;
            }
        }
        let z1 = q.dot(&t1);
        let z2 = p.dot(&t2);
        self.frame.slice_mut(s![..l, ..]).assign(&(&z1 + &(&z2 * i)));
        self.frame.slice_mut(s![l.., ..]).assign(&(&z1 - &(&z2 * i)));
        Ok(())
    }

    /// Apply `exp(O)` for a Hermitian quadratic `O` through the dense Nambu
    /// exponential. Reference route, `O(L^3)` with a `2L x 2L` eigensolve.
    pub fn apply_quadratic_exponential(&mut self, op: &QuadraticOperator) -> Result<()> {
        let e = expm_hermitian(&op.nambu(), C64::new(-1.0, 0.0))?;
        self.frame = e.dot(&self.frame);
        self.reorthonormalize(false)
    }

    /// QR re-orthonormalization. With `check_z`, also verify that `Z` is
    /// unchanged whenever `U` is invertible.
    fn reorthonormalize(&mut self, check_z: bool) -> Result<()> {
        let z_before = if check_z { self.z_matrix() } else { None };
        orthonormalize_columns(&mut self.frame)?;
        if let (Some(z0), Some(z1)) = (z_before, self.z_matrix()) {
            let diff = (&z0 - &z1).iter().map(|x| x.norm()).fold(0.0, f64::max);
            let scale = z0.iter().map(|x| x.norm()).fold(1.0, f64::max);
            if diff > 1e-8 * scale {
                return Err(EngineError::NumericalBreakdown(format!("QR changed Z by {diff:e}")));
            }
        }
        let defect = self.unitarity_defect();
        if defect > UNITARITY_TOLERANCE {
            return Err(EngineError::NumericalBreakdown(format!("Bogoliubov unitarity defect {defect:e} after QR")));
        }
        Ok(())
    }
}

/// Monitoring channel of the Kitaev engine.
#[derive(Clone, Debug, PartialEq)]
pub enum Dissipation {
    /// `m_j = n_j`.
    Onsite,
    /// `m_i = sum_j f_ij (c_i - c_i^dagger)(c_j + c_j^dagger)`.
    LongRange(LongRangeKernel),
}

#[derive(Clone, Debug)]
pub struct BdgEngine {
    state: BdgState,
    hamiltonian: QuadraticOperator,
    dissipation: Dissipation,
    gamma: f64,
    initial_parity: f64,
    steps: u64,
    cached: Option<(f64, Array2<C64>)>,
}

impl BdgEngine {
    pub fn new(state: BdgState, hamiltonian: QuadraticOperator, dissipation: Dissipation, gamma: f64) -> Result<Self> {
        if hamiltonian.sites() != state.sites() {
            return Err(EngineError::InvalidParameter("Hamiltonian and state sizes differ".into()));
        }
        if let Dissipation::LongRange(k) = &dissipation {
            if k.sites() != state.sites() {
                return Err(EngineError::InvalidParameter("kernel and state sizes differ".into()));
            }
        }
        let initial_parity = state.parity();
        Ok(Self { state, hamiltonian, dissipation, gamma, initial_parity, steps: 0, cached: None })
    }

    /// Kitaev ring from the Neel state, onsite dephasing.
    pub fn kitaev_onsite(l: usize, j: f64, h: f64, gamma: f64) -> Result<Self> {
        Self::new(BdgState::neel(l)?, build_kitaev(l, j, h)?, Dissipation::Onsite, gamma)
    }

    /// Kitaev ring from the Neel state, long-range dissipators with decay `alpha`.
    pub fn kitaev_longrange(l: usize, j: f64, h: f64, gamma: f64, alpha: f64) -> Result<Self> {
        let kernel = kac_coefficients(l, alpha)?;
        Self::new(BdgState::neel(l)?, build_kitaev(l, j, h)?, Dissipation::LongRange(kernel), gamma)
    }

    pub fn state(&self) -> &BdgState {
        &self.state
    }

    pub fn initial_parity(&self) -> f64 {
        self.initial_parity
    }

    fn propagator(&mut self, dt: f64) -> Result<Array2<C64>> {
        match &self.cached {
            Some((cdt, p)) if *cdt == dt => Ok(p.clone()),
            _ => {
                let p = expm_hermitian(&self.hamiltonian.nambu(), C64::new(0.0, -dt))?;
                self.cached = Some((dt, p.clone()));
                Ok(p)
            }
        }
    }
}

impl TrajectoryEngine for BdgEngine {
    fn noise_channels(&self) -> usize {
        self.state.sites()
    }

    fn gamma(&self) -> f64 {
        self.gamma
    }

    fn step(&mut self, increments: &[f64], dt: f64) -> Result<()> {
        let (g, f) = self.state.pair_correlations();
        let p = self.propagator(dt)?;
        self.state.unitary_step(&p);
        let l = self.state.sites();
        match &self.dissipation {
            Dissipation::Onsite => {
                let alpha: Vec<f64> =
                    (0..l).map(|j| increments[j] + (2.0 * g[[j, j]].re - 1.0) * self.gamma * dt).collect();
                self.state.scale_onsite(&alpha);
            }
            Dissipation::LongRange(kernel) => {
                let m = kernel.expectations(&g, &f);
                let alpha: Vec<f64> = (0..l).map(|i| increments[i] + 2.0 * m[i] * self.gamma * dt).collect();
                self.state.rotate_longrange(kernel, &alpha)?;
            }
        }
        let check_z = cfg!(debug_assertions) && self.steps % Z_CHECK_INTERVAL == 0;
        self.state.reorthonormalize(check_z)?;
        self.steps += 1;
        Ok(())
    }

    fn observe(&self, observable: &Observable) -> Result<f64> {
        match *observable {
            Observable::Entropy { ell } => {
                check_subsystem(self.state.sites(), ell)?;
                let (g, f) = self.state.leading_correlations(ell);
                nambu_entropy(&g, &f, ell)
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
        let defect = self.state.unitarity_defect();
        if defect > UNITARITY_TOLERANCE {
            return Err(EngineError::NumericalBreakdown(format!("Bogoliubov unitarity defect {defect:e}")));
        }
        let drift = (self.state.parity() - self.initial_parity).abs();
        if drift > PARITY_TOLERANCE {
            return Err(EngineError::NumericalBreakdown(format!("parity drifted by {drift:e}")));
        }
        Ok(())
    }
}
