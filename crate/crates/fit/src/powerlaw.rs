use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::lm::{minimize, Bounds, Data, Solution};
use crate::{distinct_count, DataPoint, Estimate, FitError, Result};

/// Weighted straight line `y = slope x + intercept`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: Estimate,
    pub intercept: Estimate,
    pub residual_norm: f64,
}

impl LinearFit {
    pub fn evaluate(&self, x: f64) -> f64 {
        self.slope.value * x + self.intercept.value
    }
}

/// Closed-form weighted line fit. All-zero standard errors select the
/// unweighted fit with residual-scaled errors.
pub fn linear_fit(points: &[DataPoint]) -> Result<LinearFit> {
    let got = distinct_count(points.iter().map(|p| p.x));
    if got < 2 {
        return Err(FitError::InsufficientPoints { needed: 2, got });
    }
    let data = Data::new(points)?;
    let (mut s, mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for i in 0..data.len() {
        let (w, x, y) = (data.w[i], data.x[i], data.y[i]);
        s += w;
        sx += w * x;
        sy += w * y;
        sxx += w * x * x;
        sxy += w * x * y;
    }
    let det = s * sxx - sx * sx;
    let slope = (s * sxy - sx * sy) / det;
    let intercept = (sxx * sy - sx * sxy) / det;
    let chi2: f64 = (0..data.len()).map(|i| data.w[i] * (data.y[i] - slope * data.x[i] - intercept).powi(2)).sum();
    let scale = data.scale(chi2, 2);
    Ok(LinearFit {
        slope: Estimate { value: slope, stderr: (scale * s / det).sqrt() },
        intercept: Estimate { value: intercept, stderr: (scale * sxx / det).sqrt() },
        residual_norm: chi2,
    })
}

/// `L0 = prefactor * gamma^exponent`, fitted in log-log.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub exponent: Estimate,
    pub prefactor: f64,
    pub n_points: usize,
}

fn log_points(points: &[(f64, f64)], gamma_max: f64) -> Result<Vec<DataPoint>> {
    let kept: Vec<DataPoint> = points
        .iter()
        .filter(|p| p.0 < gamma_max)
        .map(|&(g, l0)| DataPoint::new(g.ln(), l0.ln(), 0.0))
        .collect();
    if kept.iter().any(|p| !(p.x.is_finite() && p.y.is_finite())) {
        return Err(FitError::InvalidData("rates and lengths must be positive".into()));
    }
    let got = distinct_count(kept.iter().map(|p| p.x));
    if got < 3 {
        return Err(FitError::InsufficientPoints { needed: 3, got });
    }
    Ok(kept)
}

/// Least-squares slope of `ln L0` against `ln gamma` over `gamma < gamma_max`.
pub fn fit_l0_powerlaw(points: &[(f64, f64)], gamma_max: f64) -> Result<PowerLawFit> {
    let kept = log_points(points, gamma_max)?;
    let line = linear_fit(&kept)?;
    Ok(PowerLawFit { exponent: line.slope, prefactor: line.intercept.value.exp(), n_points: kept.len() })
}

/// Percentile interval of the exponent from `n_boot` residual-bootstrap
/// replicates at confidence `level`.
pub fn bootstrap_exponent_interval(
    points: &[(f64, f64)],
    gamma_max: f64,
    n_boot: usize,
    level: f64,
    seed: u64,
) -> Result<(f64, f64)> {
    if !(0.0 < level && level < 1.0) || n_boot < 2 {
        return Err(FitError::InvalidData("need 0 < level < 1 and at least two replicates".into()));
    }
    let kept = log_points(points, gamma_max)?;
    let line = linear_fit(&kept)?;
    let residuals: Vec<f64> = kept.iter().map(|p| p.y - line.evaluate(p.x)).collect();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut slopes = Vec::with_capacity(n_boot);
    for _ in 0..n_boot {
        let sample: Vec<DataPoint> = kept
            .iter()
            .map(|p| DataPoint::new(p.x, line.evaluate(p.x) + residuals[rng.random_range(0..residuals.len())], 0.0))
            .collect();
        slopes.push(linear_fit(&sample)?.slope.value);
    }
    slopes.sort_by(f64::total_cmp);
    let at = |q: f64| slopes[((q * (n_boot - 1) as f64).round() as usize).min(n_boot - 1)];
    let tail = 0.5 * (1.0 - level);
    Ok((at(tail), at(1.0 - tail)))
}

/// Size dependence of the Lorentzian parameters: `K = m L^x + k`,
/// `ln Q = y ln L + q`, and the linear trend of `beta` in `L`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParameterScalings {
    pub m: Estimate,
    pub x: Estimate,
    pub k: Estimate,
    pub y: Estimate,
    pub q: Estimate,
    pub beta_slope: Estimate,
}

const OPEN: Bounds = Bounds { lo: &[f64::NEG_INFINITY; 3], hi: &[f64::INFINITY; 3] };

fn offset_power(p: &[f64], l: f64, grad: &mut [f64]) -> f64 {
    let lx = l.powf(p[1]);
    grad[0] = lx;
    grad[1] = p[0] * lx * l.ln();
    grad[2] = 1.0;
    p[0] * lx + p[2]
}

/// Fit `m L^x + k` from a grid of exponents, solving for `(m, k)` linearly
/// at each start.
fn fit_offset_power(points: &[DataPoint]) -> Result<Solution> {
    let data = Data::new(points)?;
    let mut best: Option<Solution> = None;
    let mut last_err = None;
    for x0 in [0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 2.0] {
        let transformed: Vec<DataPoint> =
            points.iter().map(|p| DataPoint::new(p.x.powf(x0), p.y, p.sigma)).collect();
        let line = linear_fit(&transformed)?;
        let init = [line.slope.value, x0, line.intercept.value];
        match minimize(&offset_power, &data, &init, &[true; 3], OPEN) {
            Ok(s) if best.as_ref().is_none_or(|b| s.chi2 < b.chi2) => best = Some(s),
            Ok(_) => {}
            Err(e) => last_err = Some(e),
        }
    }
    best.ok_or_else(|| last_err.unwrap_or_else(|| FitError::NoConvergence("no start".into())))
}

/// Inputs are `(L, value, stderr)` points for each Lorentzian parameter.
pub fn fit_parameter_scalings(
    k_vs_l: &[DataPoint],
    q_vs_l: &[DataPoint],
    beta_vs_l: &[DataPoint],
) -> Result<ParameterScalings> {
    for set in [k_vs_l, q_vs_l, beta_vs_l] {
        let got = distinct_count(set.iter().map(|p| p.x));
        if got < 4 {
            return Err(FitError::InsufficientPoints { needed: 4, got });
        }
    }
    if q_vs_l.iter().any(|p| !(p.y > 0.0 && p.x > 0.0)) {
        return Err(FitError::InvalidData("Q and L must be positive".into()));
    }
    let sol = fit_offset_power(k_vs_l)?;
    let est = |i: usize| Estimate { value: sol.params[i], stderr: sol.covariance[(i, i)].sqrt() };
    let log_q: Vec<DataPoint> = q_vs_l.iter().map(|p| DataPoint::new(p.x.ln(), p.y.ln(), p.sigma / p.y)).collect();
    let q_line = linear_fit(&log_q)?;
    let beta_line = linear_fit(beta_vs_l)?;
    Ok(ParameterScalings {
        m: est(0),
        x: est(1),
        k: est(2),
        y: q_line.slope,
        q: q_line.intercept,
        beta_slope: beta_line.slope,
    })
}
