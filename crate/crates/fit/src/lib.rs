//! Fits for steady-state entanglement data.
//!
//! The central model is the interpolating size-scaling law
//! `f(L) = A L / (1 + C L^b)`, linear for `L << L0` and a power `L^(1-b)`
//! beyond the crossover `L0 = C^(-1/b)`. Alongside it sit the generalized
//! Lorentzian `K / (1 + Q gamma^beta)` for the dependence on the measurement
//! rate, power-law fits of derived parameters, and the window-stability
//! sweep of the scaling exponent.

mod lm;
mod lorentzian;
mod powerlaw;
mod scaling;
mod stability;

pub use lorentzian::{fit_lorentzian, LorentzianFit};
pub use powerlaw::{
    bootstrap_exponent_interval, fit_l0_powerlaw, fit_parameter_scalings, linear_fit, LinearFit, ParameterScalings,
    PowerLawFit,
};
pub use scaling::{fit_scaling, Caveat, FitResult, Regime, C_MIN, VOLUME_B};
pub use stability::{stability_sweep, StabilitySweep};

use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum FitError {
    #[error("need at least {needed} distinct abscissae, got {got}")]
    InsufficientPoints { needed: usize, got: usize },
    #[error("all ordinates are equal")]
    DegenerateData,
    #[error("invalid data: {0}")]
    InvalidData(String),
    #[error("optimizer did not converge: {0}")]
    NoConvergence(String),
}

pub type Result<T> = std::result::Result<T, FitError>;

/// One measured value with its standard error.
///
/// A zero `sigma` on every point selects an unweighted fit whose covariance
/// is rescaled by the residual variance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DataPoint {
    pub x: f64,
    pub y: f64,
    pub sigma: f64,
}

impl DataPoint {
    pub fn new(x: f64, y: f64, sigma: f64) -> Self {
        Self { x, y, sigma }
    }
}

/// A fitted value with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

impl Estimate {
    /// Whether `truth` lies within `z` standard errors.
    pub fn covers(&self, truth: f64, z: f64) -> bool {
        (self.value - truth).abs() <= z * self.stderr
    }
}

pub(crate) fn distinct_count(xs: impl Iterator<Item = f64>) -> usize {
    let mut v: Vec<f64> = xs.collect();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v.len()
}
