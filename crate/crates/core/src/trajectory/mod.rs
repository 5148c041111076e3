//! Stochastic scheduling, single-trajectory driving and ensemble statistics.

mod ensemble;
mod noise;

pub use ensemble::{
    ensemble_average, mean_stderr, run_ensemble, steady_state_average, steady_state_from_trajectories,
    trajectory_window_means, window_mean, EnsembleResult, Execution, SteadyState,
    DEFAULT_DRIFT_THRESHOLD,
};
pub use noise::{NoiseStream, NOISE_ALGORITHM};

use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::{EngineError, Result};

/// Quantities sampled along a trajectory.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Observable {
    /// Von Neumann entropy of the first `ell` sites.
    Entropy { ell: usize },
    /// `<n_site>` (0-based site index).
    Occupation { site: usize },
    Ipr,
    LogIpr,
}

impl fmt::Display for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Observable::Entropy { ell } => write!(f, "entropy_l{ell}"),
            Observable::Occupation { site } => write!(f, "n_{site}"),
            Observable::Ipr => write!(f, "ipr"),
            Observable::LogIpr => write!(f, "ln_ipr"),
        }
    }
}

/// Time grid of one run: `n_steps = round(t_f / dt)` steps, a sample every
/// `sample_stride` steps, and a steady-state window starting at `t_0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepSchedule {
    pub dt: f64,
    pub t_f: f64,
    pub t_0: f64,
    pub sample_stride: usize,
}

impl StepSchedule {
    /// Schedule with the default window start `t_0 = t_f / 2`.
    pub fn new(dt: f64, t_f: f64, sample_stride: usize) -> Result<Self> {
        Self::with_window(dt, t_f, t_f / 2.0, sample_stride)
    }

    pub fn with_window(dt: f64, t_f: f64, t_0: f64, sample_stride: usize) -> Result<Self> {
        let s = Self { dt, t_f, t_0, sample_stride };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(EngineError::InvalidParameter(format!("dt must be positive, got {}", self.dt)));
        }
        if !(0.0 <= self.t_0 && self.t_0 < self.t_f) {
            return Err(EngineError::InvalidParameter(format!(
                "need 0 <= t_0 < t_f, got t_0 = {}, t_f = {}",
                self.t_0, self.t_f
            )));
        }
        if self.sample_stride == 0 {
            return Err(EngineError::InvalidParameter("sample_stride must be >= 1".into()));
        }
        Ok(())
    }

    pub fn n_steps(&self) -> usize {
        (self.t_f / self.dt).round() as usize
    }

    /// Sampled times, `t = k * stride * dt` for every sample step `<= n_steps`.
    pub fn sample_times(&self) -> Vec<f64> {
        (0..=self.n_steps())
            .step_by(self.sample_stride)
            .map(|k| k as f64 * self.dt)
            .collect()
    }
}

/// The stepping contract shared by every engine.
///
/// One call to [`TrajectoryEngine::step`] is one composite step of the
/// Trotterized monitored evolution: the unitary factor followed by the
/// measurement back-action with the supplied Wiener increments.
pub trait TrajectoryEngine {
    /// Number of independent Wiener channels consumed per step.
    fn noise_channels(&self) -> usize;

    /// Measurement rate `gamma`; sets the increment variance `gamma * dt`.
    fn gamma(&self) -> f64;

    fn step(&mut self, increments: &[f64], dt: f64) -> Result<()>;

    fn observe(&self, observable: &Observable) -> Result<f64>;

    /// Engine-level invariant check, run at every sample point.
    fn check_invariants(&self) -> Result<()> {
        Ok(())
    }
}

/// Sampled observables of one trajectory; `values[k][s]` is observable `k` at
/// `times[s]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub times: Vec<f64>,
    pub observables: Vec<Observable>,
    pub values: Vec<Vec<f64>>,
}

impl TimeSeries {
    pub fn series(&self, observable: &Observable) -> Option<&[f64]> {
        self.observables
            .iter()
            .position(|o| o == observable)
            .map(|k| self.values[k].as_slice())
    }
}

/// Drive one trajectory over `schedule`, sampling `observables` at `t = 0`
/// and after every `sample_stride` steps.
pub fn run_trajectory<E: TrajectoryEngine + ?Sized>(
    engine: &mut E,
    schedule: &StepSchedule,
    stream: &mut NoiseStream,
    observables: &[Observable],
) -> Result<TimeSeries> {
    schedule.validate()?;
    let n_steps = schedule.n_steps();
    let channels = engine.noise_channels();
    let gamma = engine.gamma();
    let mut out = TimeSeries {
        times: Vec::with_capacity(n_steps / schedule.sample_stride + 1),
        observables: observables.to_vec(),
        values: vec![Vec::new(); observables.len()],
    };
    let record = |engine: &E, step: usize, out: &mut TimeSeries| -> Result<()> {
        engine.check_invariants()?;
        out.times.push(step as f64 * schedule.dt);
        for (k, obs) in observables.iter().enumerate() {
            out.values[k].push(engine.observe(obs)?);
        }
        Ok(())
    };
    record(engine, 0, &mut out)?;
    for step in 1..=n_steps {
        let dw = stream.wiener_increments(channels, gamma, schedule.dt);
        engine.step(&dw, schedule.dt)?;
        if step % schedule.sample_stride == 0 {
            record(engine, step, &mut out)?;
        }
    }
    Ok(out)
}
