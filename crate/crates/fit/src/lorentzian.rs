use serde::{Deserialize, Serialize};

use crate::lm::{minimize, Bounds, Data, Solution};
use crate::{distinct_count, DataPoint, Estimate, FitError, Result};

const Q_GRID: [f64; 5] = [1e-2, 1e-1, 1.0, 10.0, 100.0];
const BETA_GRID: [f64; 5] = [0.5, 1.0, 1.5, 2.0, 3.0];
const BOUNDS: Bounds = Bounds { lo: &[0.0; 3], hi: &[f64::INFINITY, 1e8, 10.0] };

/// Weighted fit of `S(gamma) = K / (1 + Q gamma^beta)`. `K` is the
/// `gamma -> 0` plateau.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LorentzianFit {
    pub k: f64,
    pub q: f64,
    pub beta: f64,
    /// Covariance of `(K, Q, beta)`.
    pub covariance: [[f64; 3]; 3],
    pub residual_norm: f64,
    pub dof: usize,
}

impl LorentzianFit {
    pub fn evaluate(&self, gamma: f64) -> f64 {
        self.k / (1.0 + self.q * gamma.powf(self.beta))
    }

    pub fn estimates(&self) -> [Estimate; 3] {
        let p = [self.k, self.q, self.beta];
        std::array::from_fn(|i| Estimate { value: p[i], stderr: self.covariance[i][i].sqrt() })
    }
}

fn model(p: &[f64], gamma: f64, grad: &mut [f64]) -> f64 {
    let gb = gamma.powf(p[2]);
    let den = 1.0 + p[1] * gb;
    let f = p[0] / den;
    grad[0] = 1.0 / den;
    grad[1] = -f * gb / den;
    grad[2] = -f * p[1] * gb * gamma.ln() / den;
    f
}

/// Fit `K / (1 + Q gamma^beta)` to `(gamma, S, stderr)` points. Needs four
/// distinct rates spanning at least a decade.
pub fn fit_lorentzian(points: &[DataPoint]) -> Result<LorentzianFit> {
    let got = distinct_count(points.iter().map(|p| p.x));
    if got < 4 {
        return Err(FitError::InsufficientPoints { needed: 4, got });
    }
    if points.iter().any(|p| !(p.x > 0.0)) {
        return Err(FitError::InvalidData("rates must be positive".into()));
    }
    let lo = points.iter().map(|p| p.x).fold(f64::INFINITY, f64::min);
    let hi = points.iter().map(|p| p.x).fold(0.0, f64::max);
    if hi < 10.0 * lo {
        return Err(FitError::InvalidData(format!("rates span [{lo}, {hi}], less than a decade")));
    }
    let data = Data::new(points)?;
    let mut best: Option<Solution> = None;
    let mut last_err = None;
    for &q0 in &Q_GRID {
        for &b0 in &BETA_GRID {
            let (mut num, mut den) = (0.0, 0.0);
            for i in 0..data.len() {
                let g = 1.0 / (1.0 + q0 * data.x[i].powf(b0));
                num += data.w[i] * data.y[i] * g;
                den += data.w[i] * g * g;
            }
            match minimize(&model, &data, &[num / den, q0, b0], &[true; 3], BOUNDS) {
                Ok(s) if best.as_ref().is_none_or(|b| s.chi2 < b.chi2) => best = Some(s),
                Ok(_) => {}
                Err(e) => last_err = Some(e),
            }
        }
    }
    let sol = best.ok_or_else(|| last_err.unwrap_or_else(|| FitError::NoConvergence("no start".into())))?;
    Ok(LorentzianFit {
        k: sol.params[0],
        q: sol.params[1],
        beta: sol.params[2],
        covariance: std::array::from_fn(|i| std::array::from_fn(|j| sol.covariance[(i, j)])),
        residual_norm: sol.chi2,
        dof: data.len() - 3,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_noise_free_lorentzian() {
        let gammas = [8e-3, 2e-2, 5e-2, 0.1, 0.2, 0.5, 1.0, 2.0, 4.0];
        let pts: Vec<DataPoint> = gammas.iter().map(|&g| DataPoint::new(g, 5.0 / (1.0 + 2.0 * g.powf(1.5)), 0.0)).collect();
        let fit = fit_lorentzian(&pts).unwrap();
        assert!((fit.k - 5.0).abs() < 1e-6 && (fit.q - 2.0).abs() < 1e-6 && (fit.beta - 1.5).abs() < 1e-6, "{fit:?}");
        assert!((fit.evaluate(1e-9) - 5.0).abs() < 1e-6);
    }

    #[test]
    fn narrow_range_is_rejected() {
        let pts: Vec<DataPoint> = [0.5, 0.6, 0.8, 1.0].iter().map(|&g| DataPoint::new(g, 1.0 / (1.0 + g), 0.0)).collect();
        assert!(matches!(fit_lorentzian(&pts), Err(FitError::InvalidData(_))));
        assert!(matches!(fit_lorentzian(&pts[..3]), Err(FitError::InsufficientPoints { .. })));
    }
}
