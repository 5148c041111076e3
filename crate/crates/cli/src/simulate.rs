use std::path::{Path, PathBuf};

use fermon_core::bdg::BdgEngine;
use fermon_core::ed::{EdEngine, SykCouplings, TvParams};
use fermon_core::ladder::{default_partition, run_protocol_ensemble, LadderParams};
use fermon_core::slater::SlaterEngine;
use fermon_core::{
    ensemble_average, run_ensemble, steady_state_from_trajectories, EngineError, Execution, Observable,
    TimeSeries, TrajectoryEngine,
};

use crate::config::{ModelConfig, RunConfig, SweepPoint, SykDisorder};
use crate::error::{CliError, Result};
use crate::manifest::{sha256_hex, Manifest, PointStatus, MANIFEST, RESULTS};
use crate::table::{series_bytes, trajectory_series_bytes, write_atomic, ResultRow, ResultTable};

#[derive(Clone, Debug, Default)]
pub struct SimulateOptions {
    /// Continue the run in this directory instead of starting a new one.
    pub resume: Option<PathBuf>,
    /// Size of the worker pool; `None` uses every core, `Some(1)` runs
    /// sequentially.
    pub workers: Option<usize>,
    /// Stop after computing this many points (the rest stay pending).
    pub max_points: Option<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunSummary {
    pub directory: PathBuf,
    pub config_hash: String,
    pub done: usize,
    pub failed: usize,
    pub pending: usize,
}

/// What one sweep point produced.
struct PointOutput {
    rows: Vec<ResultRow>,
    series: Option<Vec<TimeSeries>>,
}

/// Run every pending point of `config`, checkpointing after each one.
pub fn simulate(config: &RunConfig, opts: &SimulateOptions) -> Result<RunSummary> {
    config.validate()?;
    let hash = config.hash();
    let (dir, mut manifest, mut table) = match &opts.resume {
        Some(dir) => {
            let (m, t) = open_checkpoint(dir, &hash)?;
            (dir.clone(), m, t)
        }
        None => {
            let dir = config.output_dir();
            if dir.join(MANIFEST).exists() {
                return Err(CliError::Config(format!(
                    "{} already holds a run; pass --resume to continue it",
                    dir.display()
                )));
            }
            std::fs::create_dir_all(&dir).map_err(CliError::io(&dir))?;
            let m = Manifest::new(config);
            let t = ResultTable { config_hash: hash.clone(), master_seed: config.ensemble.master_seed, rows: vec![] };
            (dir, m, t)
        }
    };
    checkpoint(&dir, &mut manifest, &table)?;

    let exec = if opts.workers == Some(1) { Execution::Sequential } else { Execution::Parallel };
    let pool = match opts.workers {
        Some(n) if n > 1 => Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Config(format!("worker pool: {e}")))?,
        ),
        Some(0) => return Err(CliError::Config("--workers must be >= 1".into())),
        _ => None,
    };

    let todo: Vec<usize> =
        manifest.points.iter().filter(|p| p.status != PointStatus::Done).map(|p| p.index).collect();
    for &index in todo.iter().take(opts.max_points.unwrap_or(usize::MAX)) {
        let point = manifest.points[index].point;
        let run = || compute_point(config, index, &point, exec);
        let outcome = match &pool {
            Some(pool) => pool.install(run),
            None => run(),
        };
        let record = &mut manifest.points[index];
        match outcome {
            Ok(out) => {
                if let Some(series) = &out.series {
                    write_series(&dir, config, &hash, index, series, &mut manifest.files)?;
                }
                table.rows.retain(|r| r.point != index);
                table.rows.extend(out.rows);
                table.rows.sort_by_key(|r| r.point);
                let record = &mut manifest.points[index];
                record.status = PointStatus::Done;
                record.error = None;
            }
            Err(e) => {
                record.status = PointStatus::Failed;
                record.error = Some(e.to_string());
            }
        }
        checkpoint(&dir, &mut manifest, &table)?;
    }

    Ok(RunSummary {
        directory: dir,
        config_hash: hash,
        done: manifest.count(PointStatus::Done),
        failed: manifest.count(PointStatus::Failed),
        pending: manifest.count(PointStatus::Pending),
    })
}

/// Load and check a run directory for resumption.
fn open_checkpoint(dir: &Path, hash: &str) -> Result<(Manifest, ResultTable)> {
    let manifest = Manifest::read(dir)?;
    if manifest.config_hash != hash {
        return Err(CliError::ConfigMismatch { expected: hash.into(), found: manifest.config_hash });
    }
    manifest.verify_files(dir)?;
    if !manifest.files.contains_key(RESULTS) {
        return Err(CliError::CorruptCheckpoint(format!("{RESULTS} is not recorded in the manifest")));
    }
    let table = ResultTable::read(&dir.join(RESULTS))
        .map_err(|e| CliError::CorruptCheckpoint(format!("{RESULTS}: {e}")))?;
    if table.config_hash != hash {
        return Err(CliError::CorruptCheckpoint(format!("{RESULTS} belongs to config {}", table.config_hash)));
    }
    for p in &manifest.points {
        let has_rows = table.rows.iter().any(|r| r.point == p.index);
        if has_rows != (p.status == PointStatus::Done) {
            return Err(CliError::CorruptCheckpoint(format!(
                "point {} is {:?} in the manifest but {} in {RESULTS}",
                p.index,
                p.status,
                if has_rows { "present" } else { "absent" }
            )));
        }
    }
    Ok((manifest, table))
}

/// Results first, then the manifest that vouches for them.
fn checkpoint(dir: &Path, manifest: &mut Manifest, table: &ResultTable) -> Result<()> {
    let bytes = table.to_bytes()?;
    write_atomic(&dir.join(RESULTS), &bytes)?;
    manifest.files.insert(RESULTS.into(), sha256_hex(&bytes));
    manifest.write(dir)
}

fn write_series(
    dir: &Path,
    config: &RunConfig,
    hash: &str,
    index: usize,
    series: &[TimeSeries],
    files: &mut std::collections::BTreeMap<String, String>,
) -> Result<()> {
    let seed = config.ensemble.master_seed;
    let names: Vec<String> = config.observables.iter().map(|o| o.name().to_owned()).collect();
    let sub = dir.join("series");
    std::fs::create_dir_all(&sub).map_err(CliError::io(&sub))?;
    if config.output.time_series {
        let ens = ensemble_average(series).map_err(|source| engine_error(index, source))?;
        let bytes = series_bytes(hash, seed, &ens.times, &names, &ens.mean_series, &ens.stderr_series)?;
        let name = format!("series/point_{index:04}.csv");
        write_atomic(&dir.join(&name), &bytes)?;
        files.insert(name, sha256_hex(&bytes));
    }
    if config.output.trajectory_series {
        let bytes = trajectory_series_bytes(hash, seed, &names, series)?;
        let name = format!("series/point_{index:04}_trajectories.csv");
        write_atomic(&dir.join(&name), &bytes)?;
        files.insert(name, sha256_hex(&bytes));
    }
    Ok(())
}

fn engine_error(index: usize, source: EngineError) -> CliError {
    CliError::Engine { context: format!("sweep point {index}"), source }
}

fn compute_point(config: &RunConfig, index: usize, point: &SweepPoint, exec: Execution) -> Result<PointOutput> {
    let wrap = |source: EngineError| CliError::Engine { context: format!("sweep point {index} ({point})"), source };
    let n_traj = config.ensemble.n_traj;
    let seed = config.ensemble.master_seed;
    let row = |observable: &str, value: f64, stderr: f64, t0: f64, tf: f64, drift: Option<f64>| ResultRow {
        point: index,
        model: config.model.name().into(),
        l: point.l,
        gamma: point.gamma,
        alpha: point.alpha,
        h: point.h,
        p1: point.p1,
        p2: point.p2,
        observable: observable.into(),
        steady_value: value,
        stderr,
        t0,
        tf,
        n_traj,
        master_seed: seed,
        drift_slope: drift,
    };

    if let ModelConfig::Ladder { t1, t2, t12, tau_u, n_st, m, .. } = config.model {
        let params = LadderParams {
            t1,
            t2,
            t12,
            p1: point.p1.expect("ladder points carry p1"),
            p2: point.p2.expect("ladder points carry p2"),
            tau_u,
            n_st,
            m,
        };
        let l = point.l;
        let ens = run_protocol_ensemble(&params, l, default_partition(l), n_traj, seed, exec).map_err(wrap)?;
        let rows = vec![row("fln", ens.mean, ens.stderr, n_st as f64, (n_st + m) as f64, None)];
        return Ok(PointOutput { rows, series: None });
    }

    let schedule = config.schedule.expect("validated").schedule()?;
    let observables: Vec<Observable> =
        config.observables.iter().map(|o| o.resolve(point.l).expect("validated")).collect();
    let gamma = point.gamma.expect("non-ladder points carry gamma");
    let l = point.l;
    fn go<E: TrajectoryEngine>(
        factory: impl Fn(usize) -> fermon_core::Result<E> + Sync,
        config: &RunConfig,
        schedule: &fermon_core::StepSchedule,
        observables: &[Observable],
        exec: Execution,
    ) -> fermon_core::Result<Vec<TimeSeries>> {
        run_ensemble(config.ensemble.n_traj, config.ensemble.master_seed, factory, schedule, observables, exec)
    }
    let series = match config.model {
        ModelConfig::TightBinding { j } => go(|_| SlaterEngine::neel(l, j, gamma), config, &schedule, &observables, exec),
        ModelConfig::KitaevOnsite { j, .. } => {
            let h = point.h.expect("kitaev points carry h");
            go(|_| BdgEngine::kitaev_onsite(l, j, h, gamma), config, &schedule, &observables, exec)
        }
        ModelConfig::KitaevLongrange { j, .. } => {
            let h = point.h.expect("kitaev points carry h");
            let alpha = point.alpha.expect("long-range points carry alpha");
            go(|_| BdgEngine::kitaev_longrange(l, j, h, gamma, alpha), config, &schedule, &observables, exec)
        }
        ModelConfig::Tv { t, w, v } => {
            go(|_| EdEngine::tv_neel(l, TvParams { t, w, v }, gamma), config, &schedule, &observables, exec)
        }
        ModelConfig::Syk { j, disorder } => {
            let coupling_seed = |i: usize| match disorder {
                SykDisorder::PerTrajectory => seed.wrapping_add(i as u64),
                SykDisorder::Shared => seed,
            };
            go(
                |i| EdEngine::syk_neel(&SykCouplings::sample(l, j, coupling_seed(i))?, gamma),
                config,
                &schedule,
                &observables,
                exec,
            )
        }
        ModelConfig::Ladder { .. } => unreachable!("handled above"),
    }
    .map_err(wrap)?;

    let mut rows = Vec::with_capacity(observables.len());
    for (spec, obs) in config.observables.iter().zip(&observables) {
        let ss = steady_state_from_trajectories(&series, obs, schedule.t_0, schedule.t_f).map_err(wrap)?;
        rows.push(row(spec.name(), ss.value, ss.stderr, ss.t0, ss.tf, Some(ss.drift_slope)));
    }
    Ok(PointOutput { rows, series: Some(series) })
}
