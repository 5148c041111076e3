//! Brute-force Fock-space references for small fermion systems.
//!
//! Everything here works with dense `2^L x 2^L` matrices and is only meant
//! for `L <= 10` or so. Basis state `k` has site `j` occupied when bit `j` of
//! `k` is set, and stands for `c_1^dagger^{n_1} ... c_L^dagger^{n_L} |0>`, so
//! `c_j` picks up the parity of the occupied sites below `j`.

use ndarray::prelude::*;
use ndarray_linalg::{Eigh, EigValsh, SVD, UPLO};
use num_complex::Complex64 as C64;

pub fn dagger(a: &Array2<C64>) -> Array2<C64> {
    a.t().mapv(|z| z.conj())
}

/// Fortran-ordered copy; ndarray-linalg conjugates the eigenvectors of
/// row-major complex input.
fn column_major(a: &Array2<C64>) -> Array2<C64> {
    let mut f = Array2::<C64>::zeros(a.raw_dim().f());
    f.assign(a);
    f
}

pub fn max_abs_diff(a: &Array2<C64>, b: &Array2<C64>) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `exp(scale * H)` for Hermitian `H`.
pub fn expm_hermitian(h: &Array2<C64>, scale: C64) -> Array2<C64> {
    let n = h.nrows();
    if n == 1 {
        return array![[(scale * h[[0, 0]].re).exp()]];
    }
    let (vals, vecs) = column_major(h).eigh(UPLO::Upper).expect("Hermitian eigendecomposition");
    let mut scaled = vecs.clone();
    for (k, &lam) in vals.iter().enumerate() {
        let w = (scale * lam).exp();
        scaled.column_mut(k).mapv_inplace(|z| z * w);
    }
    scaled.dot(&dagger(&vecs))
}

/// `exp(A)` for a general square matrix by scaling and squaring of a Taylor series.
pub fn expm(a: &Array2<C64>) -> Array2<C64> {
    let n = a.nrows();
    let norm = a.iter().map(|z| z.norm()).sum::<f64>();
    let mut s = 0;
    while norm / 2f64.powi(s) > 0.5 {
        s += 1;
    }
    let x = a.mapv(|z| z / 2f64.powi(s));
    let mut result = Array2::<C64>::eye(n);
    let mut term = Array2::<C64>::eye(n);
    for k in 1..30 {
        term = term.dot(&x).mapv(|z| z / k as f64);
        result = result + &term;
    }
    for _ in 0..s {
        result = result.dot(&result);
    }
    result
}

pub fn normalize(psi: &mut Array1<C64>) {
    let n = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    psi.mapv_inplace(|z| z / n);
}

/// `|<a|b>|^2` for normalized vectors.
pub fn fidelity(a: &Array1<C64>, b: &Array1<C64>) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum::<C64>().norm_sqr()
}

pub fn expectation(op: &Array2<C64>, psi: &Array1<C64>) -> C64 {
    psi.mapv(|z| z.conj()).dot(&op.dot(psi))
}

/// Annihilation, creation and number operators on `L` modes.
pub struct Fock {
    l: usize,
    c: Vec<Array2<C64>>,
}

impl Fock {
    pub fn new(l: usize) -> Self {
        let dim = 1usize << l;
        let c = (0..l)
            .map(|j| {
                let mut m = Array2::<C64>::zeros((dim, dim));
                for k in 0..dim {
                    if k >> j & 1 == 1 {
                        let below = (k & ((1 << j) - 1)).count_ones();
                        let sign = if below % 2 == 0 { 1.0 } else { -1.0 };
                        m[[k ^ (1 << j), k]] = C64::new(sign, 0.0);
                    }
                }
                m
            })
            .collect();
        Self { l, c }
    }

    pub fn sites(&self) -> usize {
        self.l
    }

    pub fn dim(&self) -> usize {
        1 << self.l
    }

    pub fn c(&self, j: usize) -> &Array2<C64> {
        &self.c[j]
    }

    pub fn cdag(&self, j: usize) -> Array2<C64> {
        dagger(&self.c[j])
    }

    pub fn n(&self, j: usize) -> Array2<C64> {
        self.cdag(j).dot(&self.c[j])
    }

    pub fn total_number(&self) -> Array2<C64> {
        (0..self.l).fold(Array2::zeros((self.dim(), self.dim())), |acc, j| acc + self.n(j))
    }

    pub fn parity(&self) -> Array2<C64> {
        let dim = self.dim();
        Array2::from_shape_fn((dim, dim), |(a, b)| {
            if a == b {
                C64::new(if a.count_ones() % 2 == 0 { 1.0 } else { -1.0 }, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        })
    }

    /// `sum hop_ij c_i^dagger c_j + 1/2 sum (pair_ij c_i^dagger c_j^dagger + h.c.) + constant`.
    pub fn quadratic(&self, hop: &Array2<C64>, pair: &Array2<C64>, constant: f64) -> Array2<C64> {
        let dim = self.dim();
        let mut h = Array2::<C64>::eye(dim).mapv(|z| z * constant);
        for i in 0..self.l {
            let ci_dag = self.cdag(i);
            for j in 0..self.l {
                if hop[[i, j]].norm() != 0.0 {
                    h = h + ci_dag.dot(&self.c[j]).mapv(|z| z * hop[[i, j]]);
                }
                if pair[[i, j]].norm() != 0.0 {
                    let t = ci_dag.dot(&self.cdag(j)).mapv(|z| z * pair[[i, j]] * 0.5);
                    h = h + &t + dagger(&t);
                }
            }
        }
        h
    }

    pub fn vacuum(&self) -> Array1<C64> {
        let mut v = Array1::<C64>::zeros(self.dim());
        v[0] = C64::new(1.0, 0.0);
        v
    }

    /// Basis state with the given occupied sites.
    pub fn basis_state(&self, occupied: &[usize]) -> Array1<C64> {
        let mut v = Array1::<C64>::zeros(self.dim());
        let k = occupied.iter().fold(0usize, |acc, &j| acc | 1 << j);
        v[k] = C64::new(1.0, 0.0);
        v
    }

    /// `prod_k (sum_j U_jk c_j^dagger) |0>`, orbitals applied with `k = 0` leftmost.
    pub fn slater_state(&self, orbitals: &Array2<C64>) -> Array1<C64> {
        let mut psi = self.vacuum();
        for k in (0..orbitals.ncols()).rev() {
            let mut op = Array2::<C64>::zeros((self.dim(), self.dim()));
            for j in 0..self.l {
                op = op + self.cdag(j).mapv(|z| z * orbitals[[j, k]]);
            }
            psi = op.dot(&psi);
        }
        psi
    }

    /// Common vacuum of `gamma_k = sum_j (conj(U_jk) c_j + conj(V_jk) c_j^dagger)`,
    /// found as the null vector of `sum_k gamma_k^dagger gamma_k`.
    pub fn bogoliubov_vacuum(&self, u: &Array2<C64>, v: &Array2<C64>) -> Array1<C64> {
        let dim = self.dim();
        let mut k_op = Array2::<C64>::zeros((dim, dim));
        for k in 0..u.ncols() {
            let mut g = Array2::<C64>::zeros((dim, dim));
            for j in 0..self.l {
                g = g + self.c[j].mapv(|z| z * u[[j, k]].conj()) + self.cdag(j).mapv(|z| z * v[[j, k]].conj());
            }
            k_op = k_op + dagger(&g).dot(&g);
        }
        let (vals, vecs) = column_major(&k_op).eigh(UPLO::Upper).expect("Hermitian eigendecomposition");
        assert!(vals[0].abs() < 1e-9, "frame has no common vacuum (lowest eigenvalue {})", vals[0]);
        assert!(vals.len() < 2 || vals[1] > 1e-6, "common vacuum is degenerate");
        vecs.column(0).to_owned()
    }

    /// `G_ij = <c_i^dagger c_j>` and `F_ij = <c_i c_j>`.
    pub fn correlations(&self, psi: &Array1<C64>) -> (Array2<C64>, Array2<C64>) {
        let l = self.l;
        let cpsi: Vec<Array1<C64>> = self.c.iter().map(|c| c.dot(psi)).collect();
        let cdag_psi: Vec<Array1<C64>> = (0..l).map(|j| self.cdag(j).dot(psi)).collect();
        let inner = |a: &Array1<C64>, b: &Array1<C64>| a.iter().zip(b).map(|(x, y)| x.conj() * y).sum::<C64>();
        // <c_i^dagger c_j> = (c_i psi)^dagger (c_j psi); <c_i c_j> = (c_i^dagger psi)^dagger (c_j psi).
        let g = Array2::from_shape_fn((l, l), |(i, j)| inner(&cpsi[i], &cpsi[j]));
        let f = Array2::from_shape_fn((l, l), |(i, j)| inner(&cdag_psi[i], &cpsi[j]));
        (g, f)
    }

    /// One Trotterized state-diffusion step,
    /// `C exp(sum_j [dW_j + (2<m_j> - q_j) gamma dt] m_j) exp(-i H dt) psi`,
    /// with `<m_j>` evaluated on the incoming state.
    pub fn qsd_step(
        &self,
        psi: &Array1<C64>,
        h: &Array2<C64>,
        ms: &[Array2<C64>],
        q: &[f64],
        dw: &[f64],
        gamma: f64,
        dt: f64,
    ) -> Array1<C64> {
        let dim = self.dim();
        let mut gen = Array2::<C64>::zeros((dim, dim));
        for (j, m) in ms.iter().enumerate() {
            let mj = expectation(m, psi).re;
            let a = dw[j] + (2.0 * mj - q[j]) * gamma * dt;
            gen = gen + m.mapv(|z| z * a);
        }
        let evolved = expm_hermitian(h, C64::new(0.0, -dt)).dot(psi);
        let mut out = expm_hermitian(&gen, C64::new(1.0, 0.0)).dot(&evolved);
        normalize(&mut out);
        out
    }

    /// Restrict an operator to the fixed-particle-number sector, basis states
    /// in increasing order of their bit pattern.
    pub fn sector_block(&self, op: &Array2<C64>, n: usize) -> Array2<C64> {
        let idx: Vec<usize> = (0..self.dim()).filter(|k| k.count_ones() as usize == n).collect();
        Array2::from_shape_fn((idx.len(), idx.len()), |(a, b)| op[[idx[a], idx[b]]])
    }

    pub fn sector_indices(&self, n: usize) -> Vec<usize> {
        (0..self.dim()).filter(|k| k.count_ones() as usize == n).collect()
    }
}

/// Lindblad generator `-i[H, rho] + gamma sum_j (m_j rho m_j - 1/2 {m_j^2, rho})`.
pub fn lindblad_rhs(h: &Array2<C64>, ms: &[Array2<C64>], gamma: f64, rho: &Array2<C64>) -> Array2<C64> {
    let i = C64::new(0.0, 1.0);
    let mut out = (h.dot(rho) - rho.dot(h)).mapv(|z| -i * z);
    for m in ms {
        let m2 = m.dot(m);
        let d = m.dot(rho).dot(m) - (m2.dot(rho) + rho.dot(&m2)).mapv(|z| 0.5 * z);
        out = out + d.mapv(|z| gamma * z);
    }
    out
}

/// Classical fourth-order Runge-Kutta integration of the Lindblad equation,
/// returning `rho` at `t = k * dt` for `k = 0..=steps`.
pub fn lindblad_rk4(
    h: &Array2<C64>,
    ms: &[Array2<C64>],
    gamma: f64,
    rho0: &Array2<C64>,
    dt: f64,
    steps: usize,
) -> Vec<Array2<C64>> {
    let mut out = Vec::with_capacity(steps + 1);
    let mut rho = rho0.clone();
    out.push(rho.clone());
    for _ in 0..steps {
        let k1 = lindblad_rhs(h, ms, gamma, &rho);
        let k2 = lindblad_rhs(h, ms, gamma, &(&rho + &k1.mapv(|z| z * 0.5 * dt)));
        let k3 = lindblad_rhs(h, ms, gamma, &(&rho + &k2.mapv(|z| z * 0.5 * dt)));
        let k4 = lindblad_rhs(h, ms, gamma, &(&rho + &k3.mapv(|z| z * dt)));
        rho = &rho + &(k1 + k2.mapv(|z| 2.0 * z) + k3.mapv(|z| 2.0 * z) + k4).mapv(|z| z * dt / 6.0);
        out.push(rho.clone());
    }
    out
}

/// Reduced density matrix of the lowest `keep` modes of a pure state on
/// `2^total` amplitudes. The kept modes precede the traced ones in the
/// operator ordering, so no extra signs arise.
pub fn reduced_density_matrix(psi: &Array1<C64>, total: usize, keep: usize) -> Array2<C64> {
    let da = 1usize << keep;
    let db = 1usize << (total - keep);
    let m = Array2::from_shape_fn((da, db), |(a, b)| psi[a + da * b]);
    m.dot(&dagger(&m))
}

/// Trace over the highest `total - keep` modes of a density matrix.
pub fn partial_trace_high(rho: &Array2<C64>, total: usize, keep: usize) -> Array2<C64> {
    let da = 1usize << keep;
    let db = 1usize << (total - keep);
    Array2::from_shape_fn((da, da), |(a, a2)| (0..db).map(|b| rho[[a + da * b, a2 + da * b]]).sum())
}

pub fn von_neumann_entropy(rho: &Array2<C64>) -> f64 {
    let rho = rho.as_standard_layout().into_owned();
    let vals = if rho.nrows() == 1 {
        array![rho[[0, 0]].re]
    } else {
        rho.eigvalsh(UPLO::Upper).expect("Hermitian eigenvalues")
    };
    vals.iter().filter(|&&x| x > 1e-15).map(|&x| -x * x.ln()).sum()
}

/// Entanglement entropy of the first `ell` of `total` modes.
pub fn entanglement_entropy(psi: &Array1<C64>, total: usize, ell: usize) -> f64 {
    von_neumann_entropy(&reduced_density_matrix(psi, total, ell))
}

/// Fermionic partial time reversal on the lowest `la` of `total` modes:
/// `|t_A, t_B><s_A, s_B| -> (-1)^phi |s_A, t_B><t_A, s_B|` with
/// `phi = [(n(t_A) + n(s_A)) mod 2] / 2 + (n(t_A) + n(s_A)) (n(t_B) + n(s_B))`.
pub fn partial_time_reversal(rho: &Array2<C64>, total: usize, la: usize) -> Array2<C64> {
    let dim = 1usize << total;
    let mask_a = (1usize << la) - 1;
    let mut out = Array2::<C64>::zeros((dim, dim));
    for row in 0..dim {
        for col in 0..dim {
            let val = rho[[row, col]];
            if val.norm() == 0.0 {
                continue;
            }
            let (ta, tb) = (row & mask_a, row & !mask_a);
            let (sa, sb) = (col & mask_a, col & !mask_a);
            let na = (ta.count_ones() + sa.count_ones()) as usize;
            let nb = (tb.count_ones() + sb.count_ones()) as usize;
            let mut phase = if (na * nb) % 2 == 0 { C64::new(1.0, 0.0) } else { C64::new(-1.0, 0.0) };
            if na % 2 == 1 {
                phase *= C64::new(0.0, 1.0);
            }
            out[[sa | tb, ta | sb]] += phase * val;
        }
    }
    out
}

/// Sum of singular values.
pub fn trace_norm(a: &Array2<C64>) -> f64 {
    let a = a.as_standard_layout().into_owned();
    let (_, s, _) = a.svd(false, false).expect("singular values");
    s.sum()
}

/// `ln || rho^{R_A} ||_1` with `A` the lowest `la` of `total` modes.
pub fn fermionic_negativity(rho: &Array2<C64>, total: usize, la: usize) -> f64 {
    trace_norm(&partial_time_reversal(rho, total, la)).ln()
}
