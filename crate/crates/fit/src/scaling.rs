use serde::{Deserialize, Serialize};

use crate::lm::{minimize, Bounds, Data, Solution};
use crate::{distinct_count, DataPoint, Estimate, FitError, Result};

/// Below this `C` the fit is indistinguishable from a pure volume law.
pub const C_MIN: f64 = 1e-8;
/// Exponents below this count as volume law.
pub const VOLUME_B: f64 = 0.1;

const C_GRID: [f64; 6] = [1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0];
const B_GRID: [f64; 8] = [0.05, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 2.0];
/// Keeps runaway valleys (`C -> inf` with `b -> 0`) finite.
const BOUNDS: Bounds = Bounds { lo: &[0.0; 3], hi: &[f64::INFINITY, 1e8, 10.0] };
/// 95% quantiles of chi-square with one and two degrees of freedom.
const CHI2_95: [f64; 2] = [3.841, 5.991];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Volume,
    Subvolume,
    Area,
    Undetermined,
}

/// Interpretive warnings attached to a fit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Caveat {
    /// `b` is compatible with 1; a logarithmic law fits the same window.
    AreaOrLogarithm,
}

/// Weighted fit of `f(L) = A L / (1 + C L^b)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub a: f64,
    pub c: f64,
    pub b: f64,
    pub b_fixed: bool,
    /// The data do not constrain `b` (pure volume law).
    pub b_unconstrained: bool,
    /// Covariance of `(A, C, b)`; NaN where a parameter is unresolved.
    pub covariance: [[f64; 3]; 3],
    /// Weighted sum of squared residuals.
    pub residual_norm: f64,
    pub dof: usize,
    pub l0: f64,
    pub l_min: f64,
    pub l_max: f64,
    /// `L_max >= L0`: the window reaches the asymptotic regime.
    pub reliable: bool,
    pub regime: Regime,
    pub caveat: Option<Caveat>,
    /// Slope of the best pure linear law. For volume-law data `A` and `C`
    /// are not separately identifiable and this is the meaningful amplitude.
    pub linear_slope: Estimate,
}

impl FitResult {
    pub fn evaluate(&self, l: f64) -> f64 {
        model_value(self.a, self.c, self.b, l)
    }

    /// Small-size asymptote `A L`.
    pub fn linear_asymptote(&self, l: f64) -> f64 {
        self.a * l
    }

    /// Large-size asymptote `(A / C) L^(1 - b)`.
    pub fn power_asymptote(&self, l: f64) -> f64 {
        self.a / self.c * l.powf(1.0 - self.b)
    }

    /// `b`, or 0 when a volume law leaves it unconstrained.
    pub fn effective_b(&self) -> f64 {
        if self.b_unconstrained {
            0.0
        } else {
            self.b
        }
    }

    pub fn reduced_residual(&self) -> f64 {
        self.residual_norm / self.dof.max(1) as f64
    }

    /// `(A, C, b)` with standard errors from the diagonal of the covariance.
    pub fn estimates(&self) -> [Estimate; 3] {
        let p = [self.a, self.c, self.b];
        std::array::from_fn(|i| Estimate { value: p[i], stderr: self.covariance[i][i].sqrt() })
    }

    pub fn sigma_b(&self) -> f64 {
        self.covariance[2][2].sqrt()
    }
}

fn model_value(a: f64, c: f64, b: f64, l: f64) -> f64 {
    a * l / (1.0 + c * l.powf(b))
}

fn model(p: &[f64], l: f64, grad: &mut [f64]) -> f64 {
    let lb = l.powf(p[2]);
    let den = 1.0 + p[1] * lb;
    let f = p[0] * l / den;
    grad[0] = l / den;
    grad[1] = -f * lb / den;
    grad[2] = -f * p[1] * lb * l.ln() / den;
    f
}

/// Best `A` for fixed `(C, b)`; the model is linear in `A`.
fn optimal_a(data: &Data, c: f64, b: f64) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..data.len() {
        let g = data.x[i] / (1.0 + c * data.x[i].powf(b));
        num += data.w[i] * data.y[i] * g;
        den += data.w[i] * g * g;
    }
    (num / den).max(0.0)
}

fn better(a: &Solution, b: &Solution) -> bool {
    let tol = 1e-12 * a.chi2.max(b.chi2);
    a.chi2 < b.chi2 - tol || ((a.chi2 - b.chi2).abs() <= tol && a.params[2] < b.params[2])
}

fn best_fixed(data: &Data, b: f64) -> Vec<Result<Solution>> {
    C_GRID
        .iter()
        .map(|&c0| {
            let init = [optimal_a(data, c0, b), c0, b];
            minimize(&model, data, &init, &[true, true, false], BOUNDS)
        })
        .collect()
}

fn pick(candidates: impl IntoIterator<Item = Result<Solution>>) -> Result<Solution> {
    let mut best: Option<Solution> = None;
    let mut last_err = None;
    for c in candidates {
        match c {
            Ok(s) if best.as_ref().is_none_or(|b| better(&s, b)) => best = Some(s),
            Ok(_) => {}
            Err(e) => last_err = Some(e),
        }
    }
    best.ok_or_else(|| last_err.unwrap_or_else(|| FitError::NoConvergence("no starting point".into())))
}

/// Fit `S(L) = A L / (1 + C L^b)` to `(L, S, stderr)` points, optionally with
/// `b` held fixed.
///
/// The free fit starts from every `(C, b)` pair of a logarithmic grid: first
/// with `b` frozen at the grid value, then released. The lowest residual wins
/// and ties go to the smaller `b`. Because the fixed-`b` optimum at each grid
/// exponent is one of the starting points, a fixed fit at a grid exponent
/// never beats the free fit.
pub fn fit_scaling(points: &[DataPoint], fix_b: Option<f64>) -> Result<FitResult> {
    let needed = if fix_b.is_some() { 3 } else { 4 };
    let got = distinct_count(points.iter().map(|p| p.x));
    if got < needed {
        return Err(FitError::InsufficientPoints { needed, got });
    }
    if points.iter().any(|p| !(p.x > 0.0 && p.y > 0.0)) {
        return Err(FitError::InvalidData("sizes and entropies must be positive".into()));
    }
    let y0 = points[0].y;
    if points.iter().all(|p| (p.y - y0).abs() <= 1e-12 * y0) {
        return Err(FitError::DegenerateData);
    }
    if let Some(b) = fix_b {
        if !(b >= 0.0 && b.is_finite()) {
            return Err(FitError::InvalidData(format!("fixed exponent must be non-negative, got {b}")));
        }
    }
    let data = Data::new(points)?;

    let sol = match fix_b {
        Some(b) => pick(best_fixed(&data, b))?,
        None => pick(B_GRID.iter().flat_map(|&b0| {
            best_fixed(&data, b0)
                .into_iter()
                .map(|s| s.and_then(|s| minimize(&model, &data, &s.params, &[true; 3], BOUNDS)))
                .collect::<Vec<_>>()
        }))?,
    };
    let n_free = if fix_b.is_some() { 2 } else { 3 };
    Ok(finish(&data, sol, fix_b.is_some(), n_free))
}

fn finish(data: &Data, sol: Solution, b_fixed: bool, n_free: usize) -> FitResult {
    let [a, c, b] = [sol.params[0], sol.params[1], sol.params[2]];
    let covariance: [[f64; 3]; 3] = std::array::from_fn(|i| std::array::from_fn(|j| sol.covariance[(i, j)]));
    let sigma_b = covariance[2][2].sqrt();

    // Pure linear law, compared against the full model on the residual.
    let (mut swyl, mut swll) = (0.0, 0.0);
    for i in 0..data.len() {
        swyl += data.w[i] * data.y[i] * data.x[i];
        swll += data.w[i] * data.x[i] * data.x[i];
    }
    let slope = swyl / swll;
    let chi2_lin: f64 = (0..data.len()).map(|i| data.w[i] * (data.y[i] - slope * data.x[i]).powi(2)).sum();
    let linear_ok = chi2_lin - sol.chi2 <= CHI2_95[n_free - 2] * data.scale(sol.chi2, n_free);

    let regime = if linear_ok || c < C_MIN || b < VOLUME_B {
        Regime::Volume
    } else if !sigma_b.is_finite() {
        Regime::Undetermined
    } else if b >= 1.0 - sigma_b {
        Regime::Area
    } else {
        Regime::Subvolume
    };
    let caveat = (regime != Regime::Volume && (b - 1.0).abs() <= (2.0 * sigma_b).max(0.05)).then_some(Caveat::AreaOrLogarithm);
    let linear_slope = Estimate { value: slope, stderr: (data.scale(chi2_lin, 1) / swll).sqrt() };
    let l_min = data.x.iter().copied().fold(f64::INFINITY, f64::min);
    let l_max = data.x.iter().copied().fold(0.0, f64::max);
    let l0 = c.powf(-1.0 / b);
    let result = FitResult {
        a,
        c,
        b,
        b_fixed,
        b_unconstrained: regime == Regime::Volume && !b_fixed,
        covariance,
        residual_norm: sol.chi2,
        dof: data.len().saturating_sub(n_free),
        l0,
        l_min,
        l_max,
        reliable: l_max >= l0,
        regime,
        caveat,
        linear_slope,
    };
    debug_assert_monotone(&result);
    result
}

fn debug_assert_monotone(fit: &FitResult) {
    if cfg!(debug_assertions) && fit.b <= 1.0 {
        let mut prev = 0.0;
        for k in 0..=64 {
            let l = fit.l_min + (fit.l_max - fit.l_min) * k as f64 / 64.0;
            let f = fit.evaluate(l);
            assert!(f >= prev * (1.0 - 1e-12), "fitted curve decreases at L = {l}");
            prev = f;
        }
    }
}
