//! Exact trajectories in the half-filling sector for interacting chains.
//!
//! The staggered t-V ring and the complex SYK model both conserve particle
//! number, so the Neel state evolves inside a sector of dimension
//! `binomial(L, L/2)`. Each step propagates with a Lanczos exponential and
//! applies the diagonal dephasing factor.

mod basis;
mod krylov;
mod models;
mod sparse;
mod state;

pub use basis::{annihilate, create, hop, SectorBasis, MAX_SITES};
pub use krylov::{krylov_propagate, KrylovInfo, KrylovOptions};
pub use models::{build_syk_hamiltonian, build_tv_hamiltonian, SykCouplings, TvParams, MAX_SYK_SITES};
pub use sparse::SparseMatrix;
pub use state::{dephasing_step, entanglement_entropy, ipr, normalize, occupations, page_reference};

use ndarray::prelude::*;

use crate::error::{EngineError, Result};
use crate::trajectory::{Observable, TrajectoryEngine};
use crate::C64;

/// Allowed drift of the norm after a composite step.
pub const NORM_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct EdEngine {
    basis: SectorBasis,
    hamiltonian: SparseMatrix,
    psi: Array1<C64>,
    gamma: f64,
    krylov: KrylovOptions,
}

impl EdEngine {
    pub fn new(basis: SectorBasis, hamiltonian: SparseMatrix, mut psi: Array1<C64>, gamma: f64) -> Result<Self> {
        if hamiltonian.dim() != basis.dim() || psi.len() != basis.dim() {
            return Err(EngineError::InvalidParameter("state, Hamiltonian and basis sizes differ".into()));
        }
        normalize(&mut psi)?;
        Ok(Self { basis, hamiltonian, psi, gamma, krylov: KrylovOptions::default() })
    }

    fn neel_state(basis: &SectorBasis) -> Array1<C64> {
        let mut psi = Array1::zeros(basis.dim());
        psi[basis.rank(basis.neel_config()).expect("Neel lies in the half-filling sector")] = C64::new(1.0, 0.0);
        psi
    }

    pub fn tv_neel(l: usize, params: TvParams, gamma: f64) -> Result<Self> {
        let basis = SectorBasis::half_filling(l)?;
        let h = build_tv_hamiltonian(&basis, params)?;
        let psi = Self::neel_state(&basis);
        Self::new(basis, h, psi, gamma)
    }

    pub fn syk_neel(couplings: &SykCouplings, gamma: f64) -> Result<Self> {
        let basis = SectorBasis::half_filling(couplings.l)?;
        let h = build_syk_hamiltonian(&basis, couplings)?;
        let psi = Self::neel_state(&basis);
        Self::new(basis, h, psi, gamma)
    }

    pub fn with_krylov(mut self, opts: KrylovOptions) -> Self {
        self.krylov = opts;
        self
    }

    pub fn basis(&self) -> &SectorBasis {
        &self.basis
    }

    pub fn hamiltonian(&self) -> &SparseMatrix {
        &self.hamiltonian
    }

    pub fn state(&self) -> &Array1<C64> {
        &self.psi
    }
}

impl TrajectoryEngine for EdEngine {
    fn noise_channels(&self) -> usize {
        self.basis.sites()
    }

    fn gamma(&self) -> f64 {
        self.gamma
    }

    fn step(&mut self, increments: &[f64], dt: f64) -> Result<()> {
        let reference = occupations(&self.psi, &self.basis);
        let (psi, _) = krylov_propagate(&self.hamiltonian, &self.psi, dt, self.krylov)?;
        self.psi = psi;
        dephasing_step(&mut self.psi, &self.basis, increments, &reference, self.gamma, dt)
    }

    fn observe(&self, observable: &Observable) -> Result<f64> {
        match *observable {
            Observable::Entropy { ell } => entanglement_entropy(&self.psi, &self.basis, ell),
            Observable::Occupation { site } => occupations(&self.psi, &self.basis)
                .get(site)
                .copied()
                .ok_or_else(|| EngineError::InvalidParameter(format!("site {site} out of range"))),
            Observable::Ipr => Ok(ipr(&self.psi)),
            Observable::LogIpr => Ok(ipr(&self.psi).ln()),
        }
    }

    fn check_invariants(&self) -> Result<()> {
        let n = self.psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if (n - 1.0).abs() > NORM_TOLERANCE {
            return Err(EngineError::NumericalBreakdown(format!("norm drifted to {n}")));
        }
        Ok(())
    }
}
