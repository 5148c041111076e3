use serde::{Deserialize, Serialize};

use super::{run_trajectory, NoiseStream, Observable, StepSchedule, TimeSeries, TrajectoryEngine};
use crate::error::{EngineError, Result};

/// Default bound on the absolute slope of the mean series inside the
/// averaging window, in observable units per unit time.
pub const DEFAULT_DRIFT_THRESHOLD: f64 = 1e-3;

/// How the trajectories of one ensemble are scheduled.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Execution {
    Sequential,
    /// Rayon work stealing on the current pool. Falls back to sequential
    /// execution when the crate is built without the `parallel` feature.
    #[default]
    Parallel,
}

/// Trajectory mean and standard error of every observable on a shared grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleResult {
    pub times: Vec<f64>,
    pub observables: Vec<Observable>,
    pub mean_series: Vec<Vec<f64>>,
    pub stderr_series: Vec<Vec<f64>>,
    pub n_traj: usize,
}

impl EnsembleResult {
    pub fn index_of(&self, observable: &Observable) -> Option<usize> {
        self.observables.iter().position(|o| o == observable)
    }
}

/// Time-averaged steady-state value of one observable.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SteadyState {
    pub value: f64,
    pub stderr: f64,
    pub t0: f64,
    pub tf: f64,
    /// Least-squares slope of the ensemble mean over the window.
    pub drift_slope: f64,
}

impl SteadyState {
    pub fn drift_within(&self, threshold: f64) -> bool {
        self.drift_slope.abs() <= threshold
    }
}

/// Run `n_traj` trajectories. Trajectory `i` is built by `factory(i)` and
/// driven by the noise stream `(master_seed, i)`, so the output does not
/// depend on the execution mode or the number of workers.
pub fn run_ensemble<E, F>(
    n_traj: usize,
    master_seed: u64,
    factory: F,
    schedule: &StepSchedule,
    observables: &[Observable],
    exec: Execution,
) -> Result<Vec<TimeSeries>>
where
    E: TrajectoryEngine,
    F: Fn(usize) -> Result<E> + Sync,
{
    schedule.validate()?;
    let one = |i: usize| -> Result<TimeSeries> {
        let mut engine = factory(i)?;
        let mut stream = NoiseStream::new(master_seed, i as u64);
        run_trajectory(&mut engine, schedule, &mut stream, observables)
    };
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            (0..n_traj).into_par_iter().map(one).collect()
        }
        _ => (0..n_traj).map(one).collect(),
    }
}

/// Mean and standard error (sample deviation over `sqrt(N_r)`) per time point.
pub fn ensemble_average(series: &[TimeSeries]) -> Result<EnsembleResult> {
    let first = series.first().ok_or(EngineError::MismatchedGrids)?;
    for s in series {
        if s.times != first.times || s.observables != first.observables {
            return Err(EngineError::MismatchedGrids);
        }
        if s.values.iter().any(|v| v.len() != first.times.len()) {
            return Err(EngineError::MismatchedGrids);
        }
    }
    let n = series.len();
    let n_obs = first.observables.len();
    let n_t = first.times.len();
    let mut mean_series = vec![vec![0.0; n_t]; n_obs];
    let mut stderr_series = vec![vec![0.0; n_t]; n_obs];
    for k in 0..n_obs {
        for t in 0..n_t {
            let (m, se) = mean_stderr(series.iter().map(|s| s.values[k][t]));
            mean_series[k][t] = m;
            stderr_series[k][t] = se;
        }
    }
    Ok(EnsembleResult {
        times: first.times.clone(),
        observables: first.observables.clone(),
        mean_series,
        stderr_series,
        n_traj: n,
    })
}

/// Time average of the ensemble mean over `[t0, tf]`.
///
/// The uncertainty is the window average of the per-time standard error,
/// which ignores the decorrelation between time points and therefore
/// over-states the error. Use [`steady_state_from_trajectories`] when the
/// individual trajectories are available.
pub fn steady_state_average(
    result: &EnsembleResult,
    observable: &Observable,
    t0: f64,
    tf: f64,
) -> Result<SteadyState> {
    let k = result
        .index_of(observable)
        .ok_or_else(|| EngineError::UnsupportedObservable(observable.to_string()))?;
    let value = window_mean(&result.times, &result.mean_series[k], t0, tf)?;
    let stderr = window_mean(&result.times, &result.stderr_series[k], t0, tf)?;
    let drift_slope = window_slope(&result.times, &result.mean_series[k], t0, tf);
    Ok(SteadyState { value, stderr, t0, tf, drift_slope })
}

/// Time average per trajectory first, then mean and standard error across
/// the trajectory averages.
pub fn steady_state_from_trajectories(
    series: &[TimeSeries],
    observable: &Observable,
    t0: f64,
    tf: f64,
) -> Result<SteadyState> {
    let averages = trajectory_window_means(series, observable, t0, tf)?;
    let (value, stderr) = mean_stderr(averages.iter().copied());
    let ens = ensemble_average(series)?;
    let k = ens.index_of(observable).expect("checked above");
    let drift_slope = window_slope(&ens.times, &ens.mean_series[k], t0, tf);
    Ok(SteadyState { value, stderr, t0, tf, drift_slope })
}

/// Window average of `observable` for each trajectory separately.
pub fn trajectory_window_means(
    series: &[TimeSeries],
    observable: &Observable,
    t0: f64,
    tf: f64,
) -> Result<Vec<f64>> {
    series
        .iter()
        .map(|s| {
            let values = s
                .series(observable)
                .ok_or_else(|| EngineError::UnsupportedObservable(observable.to_string()))?;
            window_mean(&s.times, values, t0, tf)
        })
        .collect()
}

/// `(1 / (tf - t0)) * integral_{t0}^{tf} y dt` by the trapezoidal rule on the
/// sampled grid, with linear interpolation at window edges that fall between
/// samples.
pub fn window_mean(times: &[f64], values: &[f64], t0: f64, tf: f64) -> Result<f64> {
    let empty = EngineError::EmptyWindow { t0, tf };
    if times.len() != values.len() {
        return Err(EngineError::MismatchedGrids);
    }
    if times.len() < 2 || !(t0 < tf) {
        return Err(empty);
    }
    let eps = 1e-9 * (tf - t0).abs().max(1.0);
    if t0 < times[0] - eps || tf > times[times.len() - 1] + eps {
        return Err(empty);
    }
    let interp = |t: f64| -> f64 {
        let j = times.partition_point(|&x| x < t).clamp(1, times.len() - 1);
        let (ta, tb) = (times[j - 1], times[j]);
        let w = ((t - ta) / (tb - ta)).clamp(0.0, 1.0);
        values[j - 1] + w * (values[j] - values[j - 1])
    };
    let mut pts = vec![(t0, interp(t0))];
    pts.extend(
        times
            .iter()
            .zip(values)
            .filter(|(&t, _)| t > t0 && t < tf)
            .map(|(&t, &y)| (t, y)),
    );
    pts.push((tf, interp(tf)));
    let integral: f64 = pts.windows(2).map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1)).sum();
    Ok(integral / (tf - t0))
}

fn window_slope(times: &[f64], values: &[f64], t0: f64, tf: f64) -> f64 {
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(values)
        .filter(|(&t, _)| t >= t0 && t <= tf)
        .map(|(&t, &y)| (t, y))
        .collect();
    if pts.len() < 2 {
        return 0.0;
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

/// Sample mean and standard error `sd / sqrt(n)` with the `n - 1` sample deviation.
pub fn mean_stderr(xs: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = xs.clone().count();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.clone().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = xs.map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn single(times: Vec<f64>, ys: Vec<f64>) -> TimeSeries {
        TimeSeries { times, observables: vec![Observable::Ipr], values: vec![ys] }
    }

    #[test]
    fn two_point_formula() {
        let r = ensemble_average(&[single(vec![0.0], vec![0.0]), single(vec![0.0], vec![2.0])]).unwrap();
        assert_eq!(r.mean_series[0][0], 1.0);
        assert_abs_diff_eq!(r.stderr_series[0][0], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn identical_series_have_zero_error() {
        let s = single(vec![0.0, 1.0, 2.0], vec![0.3, 0.1, 0.7]);
        let r = ensemble_average(&vec![s; 5]).unwrap();
        assert!(r.stderr_series[0].iter().all(|&e| e == 0.0));
    }

    #[test]
    fn mismatched_grids_are_rejected() {
        let a = single(vec![0.0, 1.0], vec![0.0, 0.0]);
        let b = single(vec![0.0, 1.5], vec![0.0, 0.0]);
        assert!(matches!(ensemble_average(&[a, b]), Err(EngineError::MismatchedGrids)));
    }

    #[test]
    fn constant_and_ramp_windows() {
        let times: Vec<f64> = (0..=100).map(|k| k as f64 * 0.1).collect();
        let c = vec![3.5; times.len()];
        assert_abs_diff_eq!(window_mean(&times, &c, 2.0, 9.0).unwrap(), 3.5, epsilon = 1e-14);
        let ramp: Vec<f64> = times.iter().map(|t| 0.7 * t).collect();
        assert_abs_diff_eq!(window_mean(&times, &ramp, 0.0, 10.0).unwrap(), 0.7 * 10.0 / 2.0, epsilon = 1e-12);
        // Edges between samples are interpolated; a linear series is still exact.
        assert_abs_diff_eq!(window_mean(&times, &ramp, 1.23, 8.77).unwrap(), 0.7 * 5.0, epsilon = 1e-12);
    }

    #[test]
    fn empty_window_is_reported() {
        let times = vec![0.0, 1.0, 2.0];
        let y = vec![1.0; 3];
        assert!(matches!(window_mean(&times, &y, 1.0, 1.0), Err(EngineError::EmptyWindow { .. })));
        assert!(matches!(window_mean(&times, &y, 1.0, 5.0), Err(EngineError::EmptyWindow { .. })));
    }

    #[test]
    fn saturating_curve_plateau() {
        // y = P (1 - exp(-t / tau)) averaged over the second half.
        let (p, tau) = (2.0, 3.0);
        let times: Vec<f64> = (0..=4000).map(|k| k as f64 * 0.05).collect();
        let y: Vec<f64> = times.iter().map(|t| p * (1.0 - (-t / tau).exp())).collect();
        let v = window_mean(&times, &y, 100.0, 200.0).unwrap();
        assert!((v - p).abs() < 0.01 * p);
    }

    #[test]
    fn steady_state_reports_drift() {
        let times: Vec<f64> = (0..=200).map(|k| k as f64).collect();
        let ramp: Vec<f64> = times.iter().map(|t| 0.01 * t).collect();
        let r = ensemble_average(&[single(times.clone(), ramp)]).unwrap();
        let ss = steady_state_average(&r, &Observable::Ipr, 100.0, 200.0).unwrap();
        assert_abs_diff_eq!(ss.drift_slope, 0.01, epsilon = 1e-12);
        assert!(!ss.drift_within(DEFAULT_DRIFT_THRESHOLD));
    }

    #[test]
    fn trajectory_first_average_matches_mean_of_windows() {
        let times: Vec<f64> = (0..=10).map(|k| k as f64).collect();
        let a = single(times.clone(), vec![1.0; 11]);
        let b = single(times.clone(), vec![3.0; 11]);
        let ss = steady_state_from_trajectories(&[a, b], &Observable::Ipr, 5.0, 10.0).unwrap();
        assert_abs_diff_eq!(ss.value, 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(ss.stderr, 1.0, epsilon = 1e-14);
    }
}
