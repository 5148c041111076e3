//! Interacting Hamiltonians restricted to a particle-number sector.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::basis::{annihilate, create, hop, SectorBasis};
use super::sparse::SparseMatrix;
use crate::error::{EngineError, Result};
use crate::C64;

/// Largest SYK ring accepted by [`build_syk_hamiltonian`].
pub const MAX_SYK_SITES: usize = 20;

/// Staggered t-V ring,
/// `sum_j [-(t/2)(c_j^dagger c_{j+1} + h.c.) + W (-1)^j n_j + V (n_j - 1/2)(n_{j+1} - 1/2)]`
/// with 1-based `j`, so 0-based site `s` carries `W (-1)^(s+1)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TvParams {
    pub t: f64,
    pub w: f64,
    pub v: f64,
}

pub fn build_tv_hamiltonian(basis: &SectorBasis, p: TvParams) -> Result<SparseMatrix> {
    let l = basis.sites();
    let bonds: Vec<(usize, usize)> = if l < 2 { Vec::new() } else { (0..l).map(|a| (a, (a + 1) % l)).collect() };
    Ok(SparseMatrix::from_rows(basis.dim(), |row, entries| {
        let config = basis.unrank(row);
        let n = |s: usize| (config >> s & 1) as f64;
        let mut diag = 0.0;
        for s in 0..l {
            let stagger = if s % 2 == 0 { -1.0 } else { 1.0 };
            diag += p.w * stagger * n(s);
        }
        for &(a, b) in &bonds {
            diag += p.v * (n(a) - 0.5) * (n(b) - 0.5);
        }
        if diag != 0.0 || p.t == 0.0 {
            entries.push((row, C64::new(diag, 0.0)));
        }
        if p.t != 0.0 {
            for &(a, b) in &bonds {
                for (x, y) in [(a, b), (b, a)] {
                    if let Some((out, sign)) = hop(config, x, y) {
                        let col = basis.rank(out).expect("hopping conserves particle number");
                        // <row| c_x^dagger c_y |col> is the mirror of the move applied to `row`.
                        entries.push((col, C64::new(-0.5 * p.t * sign, 0.0)));
                    }
                }
            }
        }
    }))
}

/// Couplings of the complex SYK model.
///
/// The tensor `J_ij,kl` is antisymmetric in `(i, j)` and in `(k, l)`, and
/// Hermitian as `J_kl,ij = conj(J_ij,kl)`. It is stored as the Hermitian
/// matrix `K[P, Q]` over ordered pairs `P = (i < j)`, `Q = (k < l)`:
/// diagonal entries are real Gaussians with variance `J^2`, off-diagonal
/// entries complex Gaussians with `E|K|^2 = J^2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SykCouplings {
    pub l: usize,
    pub j: f64,
    pub seed: u64,
    pairs: Vec<(usize, usize)>,
    kernel: Vec<C64>,
}

impl SykCouplings {
    pub fn sample(l: usize, j: f64, seed: u64) -> Result<Self> {
        if l > MAX_SYK_SITES {
            return Err(EngineError::SizeLimit { size: l, limit: MAX_SYK_SITES });
        }
        let pairs: Vec<(usize, usize)> = (0..l).flat_map(|a| (a + 1..l).map(move |b| (a, b))).collect();
        let m = pairs.len();
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let real = Normal::new(0.0, j.abs()).map_err(|e| EngineError::InvalidParameter(e.to_string()))?;
        let half = Normal::new(0.0, j.abs() / 2f64.sqrt()).map_err(|e| EngineError::InvalidParameter(e.to_string()))?;
        let mut kernel = vec![C64::new(0.0, 0.0); m * m];
        for p in 0..m {
            kernel[p * m + p] = C64::new(real.sample(&mut rng), 0.0);
            for q in p + 1..m {
                let z = C64::new(half.sample(&mut rng), half.sample(&mut rng));
                kernel[p * m + q] = z;
                kernel[q * m + p] = z.conj();
            }
        }
        Ok(Self { l, j, seed, pairs, kernel })
    }

    pub fn n_pairs(&self) -> usize {
        self.pairs.len()
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    /// `K[P, Q]` for pair indices.
    pub fn pair_coupling(&self, p: usize, q: usize) -> C64 {
        self.kernel[p * self.pairs.len() + q]
    }

    fn pair_index(&self, a: usize, b: usize) -> usize {
        // Pairs are listed row by row: (0,1), (0,2), ..., (1,2), ...
        let l = self.l;
        a * (2 * l - a - 1) / 2 + (b - a - 1)
    }

    /// Full tensor element `J_ij,kl`.
    pub fn coupling(&self, i: usize, j: usize, k: usize, l: usize) -> C64 {
        if i == j || k == l {
            return C64::new(0.0, 0.0);
        }
        let (s1, p) = if i < j { (1.0, self.pair_index(i, j)) } else { (-1.0, self.pair_index(j, i)) };
        let (s2, q) = if k < l { (1.0, self.pair_index(k, l)) } else { (-1.0, self.pair_index(l, k)) };
        self.pair_coupling(p, q) * (s1 * s2)
    }

    /// Raw kernel entries in pair order, for moment checks.
    pub fn kernel_entries(&self) -> &[C64] {
        &self.kernel
    }
}

/// `H = L^(-3/2) sum_ijkl J_ij,kl c_i^dagger c_j^dagger c_k c_l`
///   `= 4 L^(-3/2) sum_{i<j, k<l} K[ij, kl] c_i^dagger c_j^dagger c_k c_l`.
pub fn build_syk_hamiltonian(basis: &SectorBasis, couplings: &SykCouplings) -> Result<SparseMatrix> {
    let l = basis.sites();
    if l != couplings.l {
        return Err(EngineError::InvalidParameter(format!(
            "couplings drawn for {} sites, basis has {l}",
            couplings.l
        )));
    }
    if l > MAX_SYK_SITES {
        return Err(EngineError::SizeLimit { size: l, limit: MAX_SYK_SITES });
    }
    let prefactor = 4.0 / (l as f64).powf(1.5);
    let pairs = couplings.pairs();
    let mut h = SparseMatrix::from_rows(basis.dim(), |row, entries| {
        let config = basis.unrank(row);
        // Collect <out| H |row>, then store its conjugate as <row| H |out>.
        for (q, &(k, ll)) in pairs.iter().enumerate() {
            let Some((c1, s1)) = annihilate(config, ll) else { continue };
            let Some((c2, s2)) = annihilate(c1, k) else { continue };
            for (p, &(i, j)) in pairs.iter().enumerate() {
                let Some((c3, s3)) = create(c2, j) else { continue };
                let Some((out, s4)) = create(c3, i) else { continue };
                let amp = couplings.pair_coupling(p, q) * (prefactor * s1 * s2 * s3 * s4);
                let col = basis.rank(out).expect("number conserving");
                entries.push((col, amp.conj()));
            }
        }
    });
    h.hermitize_from_upper();
    Ok(h)
}
