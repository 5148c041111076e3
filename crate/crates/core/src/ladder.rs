//! Two-leg free-fermion ladder under stroboscopic unitary evolution and
//! random projective number measurements.
//!
//! Chain 0 is the System, chain 1 the Ancilla. Mode `(chain, site)` has index
//! `chain * L + site`, and the state is tracked through
//! `D_ab = <c_a^dagger c_b>`.

use ndarray::prelude::*;
use ndarray::s;
use ndarray_linalg::SVD;
use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::error::{EngineError, Result};
use crate::linalg::{dagger, eigh, eigvalsh, hermiticity_defect};
use crate::trajectory::{mean_stderr, Execution, NoiseStream};
use crate::C64;

/// Outcomes with probability at or below this are never drawn; the opposite
/// outcome is applied instead.
pub const OUTCOME_FLOOR: f64 = 1e-12;
/// Resolvents with a smaller inverse condition number are rejected.
pub const RESOLVENT_RCOND: f64 = 1e-12;
/// Allowed change of `tr D` over one measurement sweep.
pub const TRACE_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LadderParams {
    pub t1: f64,
    pub t2: f64,
    pub t12: f64,
    /// Measurement probability per System site.
    pub p1: f64,
    /// Measurement probability per Ancilla site.
    pub p2: f64,
    /// Duration of the unitary part of a cycle.
    pub tau_u: f64,
    /// Cycles before the tail average starts.
    pub n_st: usize,
    /// Cycles in the tail average.
    pub m: usize,
}

impl LadderParams {
    /// `t1 = 1`, `t12 = pi/2`, `tau_u = 1`, 250 transient cycles, 5 averaged.
    pub fn with_rates(t2: f64, p1: f64, p2: f64) -> Self {
        Self { t1: 1.0, t2, t12: std::f64::consts::FRAC_PI_2, p1, p2, tau_u: 1.0, n_st: 250, m: 5 }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, p) in [("p1", self.p1), ("p2", self.p2)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(EngineError::InvalidParameter(format!("{name} = {p} outside [0, 1]")));
            }
        }
        if !(self.tau_u >= 0.0 && self.tau_u.is_finite()) {
            return Err(EngineError::InvalidParameter(format!("tau_u = {} must be >= 0", self.tau_u)));
        }
        if self.m == 0 {
            return Err(EngineError::InvalidParameter("tail average needs m >= 1".into()));
        }
        Ok(())
    }
}

/// Diagonal `D` with `l` of the `2l` modes filled, the filled set drawn
/// uniformly.
pub fn init_random_halffilling(l: usize, stream: &mut NoiseStream) -> Array2<C64> {
    let mut d = Array2::zeros((2 * l, 2 * l));
    for a in sample(stream.rng(), 2 * l, l) {
        d[[a, a]] = C64::new(1.0, 0.0);
    }
    d
}

/// `U_k = exp(-i H_k tau)` for `H_k = [[2 t1 cos k, t12], [t12, 2 t2 cos k]]`,
/// written as `e^{-i a0 tau} (cos(|a| tau) - i sin(|a| tau) a.sigma / |a|)`.
pub fn bloch_unitary(params: &LadderParams, k: f64) -> [[C64; 2]; 2] {
    let (h11, h22) = (2.0 * params.t1 * k.cos(), 2.0 * params.t2 * k.cos());
    let a0 = 0.5 * (h11 + h22);
    let (ax, az) = (params.t12, 0.5 * (h11 - h22));
    let norm = ax.hypot(az);
    let tau = params.tau_u;
    let phase = C64::new(0.0, -a0 * tau).exp();
    let c = (norm * tau).cos();
    let (sx, sz) = if norm > 0.0 {
        let s = (norm * tau).sin() / norm;
        (s * ax, s * az)
    } else {
        (0.0, 0.0)
    };
    let i = C64::new(0.0, 1.0);
    [
        [phase * (c - i * sz), phase * (-i * sx)],
        [phase * (-i * sx), phase * (c + i * sz)],
    ]
}

/// `R_(s,m),(s',n) = (1/L) sum_k e^{-ik(m-n)} [U_k]_{s s'}`, which is the
/// transpose of `exp(-i h tau)` for the real-space single-particle `h`.
pub fn bloch_step_matrix(params: &LadderParams, l: usize) -> Array2<C64> {
    let blocks: Vec<(f64, [[C64; 2]; 2])> = (0..l)
        .map(|q| {
            let k = 2.0 * std::f64::consts::PI * q as f64 / l as f64;
            (k, bloch_unitary(params, k))
        })
        .collect();
    let mut r = Array2::zeros((2 * l, 2 * l));
    for m in 0..l {
        for n in 0..l {
            let dm = m as f64 - n as f64;
            for s in 0..2 {
                for t in 0..2 {
                    let acc: C64 = blocks.iter().map(|(k, u)| C64::from_polar(1.0, -k * dm) * u[s][t]).sum();
                    r[[s * l + m, t * l + n]] = acc / l as f64;
                }
            }
        }
    }
    r
}

/// Real-space single-particle Hamiltonian, `H = sum_ab h_ab c_a^dagger c_b`.
pub fn ladder_hamiltonian(params: &LadderParams, l: usize) -> Array2<C64> {
    let mut h = Array2::<C64>::zeros((2 * l, 2 * l));
    for (chain, t) in [(0, params.t1), (1, params.t2)] {
        if l >= 2 {
            for j in 0..l {
                let (a, b) = (chain * l + j, chain * l + (j + 1) % l);
                h[[a, b]] += t;
                h[[b, a]] += t;
            }
        } else {
            // A one-site ring hops onto itself: 2 t cos 0.
            h[[chain * l, chain * l]] += 2.0 * t;
        }
    }
    for j in 0..l {
        h[[j, l + j]] += params.t12;
        h[[l + j, j]] += params.t12;
    }
    h
}

/// `D <- R^dagger D R`.
pub fn unitary_update(d: &Array2<C64>, r: &Array2<C64>) -> Array2<C64> {
    dagger(r).dot(d).dot(r)
}

/// Project mode `a` onto occupation `outcome`.
pub fn project(d: &mut Array2<C64>, a: usize, outcome: bool) -> Result<()> {
    let n = d.nrows();
    let p1 = d[[a, a]].re;
    let col = d.column(a).to_owned();
    let row = d.row(a).to_owned();
    let one = C64::new(1.0, 0.0);
    if outcome {
        if p1 <= OUTCOME_FLOOR {
            return Err(EngineError::DegenerateDenominator(p1));
        }
        for i in 0..n {
            for j in 0..n {
                d[[i, j]] -= col[i] * row[j] / p1;
            }
        }
        d[[a, a]] += one;
    } else {
        let p0 = 1.0 - p1;
        if p0 <= OUTCOME_FLOOR {
            return Err(EngineError::DegenerateDenominator(p0));
        }
        let e = |i: usize| if i == a { one } else { C64::new(0.0, 0.0) };
        for i in 0..n {
            for j in 0..n {
                d[[i, j]] += (e(i) - col[i]) * (e(j) - row[j]) / p0;
            }
        }
        d[[a, a]] -= one;
    }
    // The updated row and column are exactly the unit vector (or zero).
    for i in 0..n {
        d[[i, a]] = C64::new(0.0, 0.0);
        d[[a, i]] = C64::new(0.0, 0.0);
    }
    d[[a, a]] = if outcome { one } else { C64::new(0.0, 0.0) };
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Measurement {
    pub mode: usize,
    pub outcome: bool,
    /// The drawn outcome had probability below [`OUTCOME_FLOOR`] and was replaced.
    pub forced: bool,
}

/// Visit the modes site by site (System before Ancilla at each site),
/// measure each with its chain's probability and apply the Born-rule
/// outcome. Later measurements see the updates of earlier ones.
pub fn projective_sweep(d: &mut Array2<C64>, p1: f64, p2: f64, stream: &mut NoiseStream) -> Result<Vec<Measurement>> {
    let l = d.nrows() / 2;
    let trace_before: f64 = (0..2 * l).map(|a| d[[a, a]].re).sum();
    let mut record = Vec::new();
    for site in 0..l {
        for (chain, p) in [(0, p1), (1, p2)] {
            let a = chain * l + site;
            let z = stream.uniform_open_closed();
            if z > p {
                continue;
            }
            let q = stream.uniform_open_closed();
            let prob_one = d[[a, a]].re;
            let mut outcome = q <= prob_one;
            let mut forced = false;
            if outcome && prob_one <= OUTCOME_FLOOR {
                outcome = false;
                forced = true;
            } else if !outcome && 1.0 - prob_one <= OUTCOME_FLOOR {
                outcome = true;
                forced = true;
            }
            project(d, a, outcome)?;
            record.push(Measurement { mode: a, outcome, forced });
        }
    }
    // The state always has a definite particle number, which projections keep.
    let trace_after: f64 = (0..2 * l).map(|a| d[[a, a]].re).sum();
    if (trace_after - trace_before).abs() > TRACE_TOLERANCE {
        return Err(EngineError::NumericalBreakdown(format!(
            "tr D moved from {trace_before} to {trace_after} in a sweep"
        )));
    }
    Ok(record)
}

/// Fermionic logarithmic negativity between the first `ell` System sites and
/// the rest of the System, with the Ancilla traced out.
///
/// With `Gamma_1 = 2 D_1 - 1` and `Gamma_+-` the partially time-reversed
/// blocks, `Gamma_- = Gamma_+^dagger`, so `Gamma_x = (1 - S^-1 K) / 2` with
/// `S = 1 + Gamma_+ Gamma_+^dagger` and `K = Gamma_+ + Gamma_+^dagger`. Its
/// eigenvalues satisfy `mu = sigma^2 / 2` and `1 - mu = tau^2 / 2`, where
/// `sigma` and `tau` are the singular values of `S^-1/2 (1 - Gamma_+)` and
/// `S^-1/2 (1 + Gamma_+)`. Working with `sigma`, `tau` directly avoids taking
/// square roots of eigenvalues that sit at roundoff distance from 0 or 1.
pub fn fln(d: &Array2<C64>, ell: usize) -> Result<f64> {
    let l = d.nrows() / 2;
    if ell == 0 || ell >= l {
        return Err(EngineError::InvalidParameter(format!("partition {ell} must lie in 1..{l}")));
    }
    let d1 = d.slice(s![..l, ..l]).to_owned();
    let defect = hermiticity_defect(&d1);
    if defect > 1e-8 {
        return Err(EngineError::NotHermitian(defect));
    }
    let i = C64::new(0.0, 1.0);
    let id = Array2::<C64>::eye(l);
    let gamma1 = d1.mapv(|z| 2.0 * z) - &id;
    let gp = Array2::from_shape_fn((l, l), |(a, b)| {
        let g = gamma1[[a, b]];
        match (a < ell, b < ell) {
            (true, true) => g,
            (false, false) => -g,
            _ => i * g,
        }
    });
    let resolvent = &id + &gp.dot(&dagger(&gp));
    let (s_vals, s_vecs) = eigh(&resolvent)?;
    let rcond = s_vals[0] / s_vals[l - 1];
    if !(rcond > RESOLVENT_RCOND) {
        return Err(EngineError::SingularResolvent(rcond));
    }
    let inv_sqrt = {
        let scaled = Array2::from_shape_fn((l, l), |(a, k)| s_vecs[[a, k]] / s_vals[k].sqrt());
        scaled.dot(&dagger(&s_vecs))
    };
    let (_, sigma, _) = inv_sqrt.dot(&(&id - &gp)).svd(false, false)?;
    let (_, tau, _) = inv_sqrt.dot(&(&id + &gp)).svd(false, false)?;
    // SVD returns descending values; sigma^2 + tau^2 = 2 pairs the smallest
    // sigma with the largest tau.
    let mut e: f64 = sigma.iter().rev().zip(tau.iter()).map(|(x, y)| ((x + y) / 2f64.sqrt()).ln()).sum();
    for lam in eigvalsh(&d1)?.iter() {
        let x = lam.clamp(0.0, 1.0);
        e += 0.5 * ((1.0 - x).powi(2) + x * x).ln();
    }
    Ok(e)
}

/// FLN partition used for a System of `l` sites: `l / 2`, at least 1.
pub fn default_partition(l: usize) -> usize {
    (l / 2).max(1)
}

/// One realization of the protocol.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolRun {
    /// FLN after each of the `m` tail cycles.
    pub tail: Vec<f64>,
    pub tail_mean: f64,
}

/// Random half-filled product state, then `n_st + m` cycles of
/// `unitary_update` followed by `projective_sweep`; the FLN after each of
/// the last `m` cycles is averaged.
pub fn run_protocol(params: &LadderParams, l: usize, ell: usize, stream: &mut NoiseStream) -> Result<ProtocolRun> {
    params.validate()?;
    let r = bloch_step_matrix(params, l);
    let mut d = init_random_halffilling(l, stream);
    let mut tail = Vec::with_capacity(params.m);
    for cycle in 1..=params.n_st + params.m {
        d = unitary_update(&d, &r);
        projective_sweep(&mut d, params.p1, params.p2, stream)?;
        if cycle > params.n_st {
            tail.push(fln(&d, ell)?);
        }
    }
    let tail_mean = tail.iter().sum::<f64>() / tail.len() as f64;
    Ok(ProtocolRun { tail, tail_mean })
}

/// Trajectory-averaged steady-state FLN.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LadderEnsemble {
    pub mean: f64,
    pub stderr: f64,
    pub n_traj: usize,
}

/// Run `n_traj` independent protocols; trajectory `i` uses the stream
/// `(master_seed, i)`.
pub fn run_protocol_ensemble(
    params: &LadderParams,
    l: usize,
    ell: usize,
    n_traj: usize,
    master_seed: u64,
    exec: Execution,
) -> Result<LadderEnsemble> {
    let one = |i: usize| run_protocol(params, l, ell, &mut NoiseStream::new(master_seed, i as u64)).map(|r| r.tail_mean);
    let values: Vec<f64> = match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            (0..n_traj).into_par_iter().map(one).collect::<Result<_>>()?
        }
        _ => (0..n_traj).map(one).collect::<Result<_>>()?,
    };
    let (mean, stderr) = mean_stderr(values.iter().copied());
    Ok(LadderEnsemble { mean, stderr, n_traj })
}
