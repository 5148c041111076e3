//! Bounded, weighted Levenberg-Marquardt for models with a handful of
//! parameters.

use nalgebra::{DMatrix, DVector};

use crate::{DataPoint, FitError, Result};

/// `model(params, x, grad)` returns `f(x)` and writes `df/dparams` into `grad`.
pub(crate) type Model<'a> = dyn Fn(&[f64], f64, &mut [f64]) -> f64 + 'a;

const MAX_ITER: usize = 2000;
const LAMBDA_MAX: f64 = 1e20;

#[derive(Clone, Debug)]
pub(crate) struct Data {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub w: Vec<f64>,
    /// Unit weights: rescale the covariance by the residual variance.
    pub unweighted: bool,
}

impl Data {
    pub fn new(points: &[DataPoint]) -> Result<Self> {
        if points.iter().any(|p| !(p.x.is_finite() && p.y.is_finite() && p.sigma.is_finite())) {
            return Err(FitError::InvalidData("non-finite value".into()));
        }
        let zero = points.iter().filter(|p| p.sigma == 0.0).count();
        let unweighted = zero == points.len();
        if !unweighted && (zero > 0 || points.iter().any(|p| p.sigma < 0.0)) {
            return Err(FitError::InvalidData("standard errors must be all positive or all zero".into()));
        }
        let w = points.iter().map(|p| if unweighted { 1.0 } else { p.sigma.powi(-2) }).collect();
        Ok(Self { x: points.iter().map(|p| p.x).collect(), y: points.iter().map(|p| p.y).collect(), w, unweighted })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn chi2(&self, model: &Model, p: &[f64]) -> f64 {
        let mut grad = vec![0.0; p.len()];
        (0..self.len()).map(|i| self.w[i] * (self.y[i] - model(p, self.x[i], &mut grad)).powi(2)).sum()
    }

    /// Residual variance used to scale unweighted covariances.
    pub fn scale(&self, chi2: f64, n_free: usize) -> f64 {
        if self.unweighted {
            chi2 / (self.len().saturating_sub(n_free)).max(1) as f64
        } else {
            1.0
        }
    }
}

#[derive(Clone, Debug)]
pub(crate) struct Solution {
    pub params: Vec<f64>,
    pub chi2: f64,
    /// Covariance over all parameters. Fixed parameters have zero rows;
    /// parameters the data cannot resolve have NaN rows.
    pub covariance: DMatrix<f64>,
}

fn linearize(model: &Model, data: &Data, p: &[f64], free: &[usize]) -> (DMatrix<f64>, DVector<f64>, f64) {
    let n = data.len();
    let mut jac = DMatrix::zeros(n, free.len());
    let mut r = DVector::zeros(n);
    let mut grad = vec![0.0; p.len()];
    for i in 0..n {
        let sw = data.w[i].sqrt();
        r[i] = sw * (data.y[i] - model(p, data.x[i], &mut grad));
        for (k, &j) in free.iter().enumerate() {
            jac[(i, k)] = sw * grad[j];
        }
    }
    let chi2 = r.norm_squared();
    (jac, r, chi2)
}

/// Box constraints `lo[j] <= params[j] <= hi[j]`.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Bounds<'a> {
    pub lo: &'a [f64],
    pub hi: &'a [f64],
}

impl Bounds<'_> {
    fn clamp(&self, j: usize, x: f64) -> f64 {
        x.max(self.lo[j]).min(self.hi[j])
    }
}

/// Minimize the weighted chi-square from `init` inside `bounds`, only moving
/// the parameters flagged in `free`.
pub(crate) fn minimize(model: &Model, data: &Data, init: &[f64], free: &[bool], bounds: Bounds) -> Result<Solution> {
    let np = init.len();
    let idx: Vec<usize> = (0..np).filter(|&j| free[j]).collect();
    let mut p: Vec<f64> = init.iter().enumerate().map(|(j, &x)| bounds.clamp(j, x)).collect();
    let (mut jac, mut r, mut chi2) = linearize(model, data, &p, &idx);
    if !chi2.is_finite() {
        return Err(FitError::NoConvergence("non-finite residual at the starting point".into()));
    }
    let mut lambda = 1e-3;
    let mut converged = idx.is_empty();
    let mut iter = 0;
    while !converged {
        iter += 1;
        if iter > MAX_ITER {
            return Err(FitError::NoConvergence(format!("no convergence after {MAX_ITER} iterations")));
        }
        let jtj = jac.transpose() * &jac;
        let g = jac.transpose() * &r;
        if chi2 == 0.0 || g.amax() == 0.0 {
            break;
        }
        loop {
            let mut a = jtj.clone();
            for k in 0..idx.len() {
                a[(k, k)] += lambda * jtj[(k, k)].max(1e-30);
            }
            let Some(delta) = a.cholesky().map(|c| c.solve(&g)) else {
                lambda *= 10.0;
                if lambda > LAMBDA_MAX {
                    converged = true;
                    break;
                }
                continue;
            };
            let mut trial = p.clone();
            for (k, &j) in idx.iter().enumerate() {
                trial[j] = bounds.clamp(j, p[j] + delta[k]);
            }
            let trial_chi2 = data.chi2(model, &trial);
            if trial_chi2.is_finite() && trial_chi2 < chi2 {
                let small_step = idx.iter().all(|&j| (trial[j] - p[j]).abs() <= 1e-12 * (p[j].abs() + 1e-12));
                let small_gain = chi2 - trial_chi2 <= 1e-12 * chi2;
                p = trial;
                (jac, r, chi2) = linearize(model, data, &p, &idx);
                lambda = (lambda / 10.0).max(1e-12);
                converged = small_step || small_gain;
                break;
            }
            lambda *= 10.0;
            if lambda > LAMBDA_MAX {
                // No direction lowers the objective any further.
                converged = true;
                break;
            }
        }
    }
    let covariance = covariance(&jac, &idx, np, data.scale(chi2, idx.len()));
    Ok(Solution { params: p, chi2, covariance })
}

/// Beyond this the normal matrix is treated as singular.
const MAX_CONDITION: f64 = 1e12;

fn covariance(jac: &DMatrix<f64>, idx: &[usize], np: usize, scale: f64) -> DMatrix<f64> {
    let mut cov = DMatrix::zeros(np, np);
    // Columns with no sensitivity cannot be resolved.
    let live: Vec<usize> = (0..idx.len()).filter(|&k| jac.column(k).norm() > 0.0).collect();
    for (k, &j) in idx.iter().enumerate() {
        if !live.contains(&k) {
            cov.row_mut(j).fill(f64::NAN);
            cov.column_mut(j).fill(f64::NAN);
        }
    }
    if live.is_empty() {
        return cov;
    }
    // Unit columns make the conditioning test independent of parameter units.
    let norms: Vec<f64> = live.iter().map(|&k| jac.column(k).norm()).collect();
    let mut sub = jac.select_columns(&live);
    for (mut c, n) in sub.column_iter_mut().zip(&norms) {
        c /= *n;
    }
    let normal = sub.transpose() * &sub;
    let eig = normal.clone().symmetric_eigen().eigenvalues;
    let (lo, hi) = (eig.min(), eig.max());
    let inv = if lo > MAX_CONDITION.recip() * hi { normal.try_inverse() } else { None };
    for (a, &ka) in live.iter().enumerate() {
        for (b, &kb) in live.iter().enumerate() {
            cov[(idx[ka], idx[kb])] = inv.as_ref().map_or(f64::NAN, |m| m[(a, b)] * scale / (norms[a] * norms[b]));
        }
    }
    cov
}
