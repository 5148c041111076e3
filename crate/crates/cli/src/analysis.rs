//! Fit front end: result tables in, JSON reports and plot-ready CSV out.

use std::collections::BTreeMap;
use std::path::Path;

use fermon_fit::{
    bootstrap_exponent_interval, fit_l0_powerlaw, fit_lorentzian, fit_parameter_scalings, fit_scaling,
    stability_sweep, DataPoint, FitError, FitResult, LorentzianFit, ParameterScalings, PowerLawFit, StabilitySweep,
};
use serde::Serialize;

use crate::error::{CliError, Result};
use crate::manifest::{Manifest, PointStatus};
use crate::table::{write_atomic, ResultRow, ResultTable};

/// Samples per fitted curve in the plot files.
const CURVE_SAMPLES: usize = 100;
const BOOTSTRAP_REPLICATES: usize = 2000;

/// The parameters that label a group of rows; the swept axis is `None`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GroupKey {
    pub model: String,
    pub l: Option<usize>,
    pub gamma: Option<f64>,
    pub alpha: Option<f64>,
    pub h: Option<f64>,
    pub p1: Option<f64>,
    pub p2: Option<f64>,
}

impl GroupKey {
    fn label(&self) -> String {
        let mut s = self.model.clone();
        if let Some(l) = self.l {
            s += &format!(" L={l}");
        }
        for (n, v) in [("gamma", self.gamma), ("alpha", self.alpha), ("h", self.h), ("p1", self.p1), ("p2", self.p2)] {
            if let Some(v) = v {
                s += &format!(" {n}={v}");
            }
        }
        s
    }

    fn sort_key(&self) -> (String, Option<usize>, [Option<u64>; 5]) {
        let bits = |v: Option<f64>| v.map(f64::to_bits);
        (
            self.model.clone(),
            self.l,
            [bits(self.gamma), bits(self.alpha), bits(self.h), bits(self.p1), bits(self.p2)],
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Axis {
    L,
    Gamma,
}

/// Rows of `observable` grouped by every parameter except `axis`, as
/// `(axis value, value, stderr)` points sorted along the axis.
fn group_rows(rows: &[ResultRow], observable: &str, axis: Axis) -> Vec<(GroupKey, Vec<DataPoint>)> {
    let mut groups: BTreeMap<_, (GroupKey, Vec<DataPoint>)> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.observable == observable) {
        let x = match axis {
            Axis::L => r.l as f64,
            Axis::Gamma => match r.gamma {
                Some(g) => g,
                None => continue,
            },
        };
        let key = GroupKey {
            model: r.model.clone(),
            l: (axis != Axis::L).then_some(r.l),
            gamma: if axis == Axis::Gamma { None } else { r.gamma },
            alpha: r.alpha,
            h: r.h,
            p1: r.p1,
            p2: r.p2,
        };
        groups
            .entry(key.sort_key())
            .or_insert_with(|| (key, Vec::new()))
            .1
            .push(DataPoint::new(x, r.steady_value, r.stderr));
    }
    groups
        .into_values()
        .map(|(k, mut pts)| {
            pts.sort_by(|a, b| a.x.total_cmp(&b.x));
            // Weighted fits need every point weighted; fall back to an
            // unweighted fit when some errors are zero or missing.
            if pts.iter().any(|p| !(p.sigma > 0.0 && p.sigma.is_finite())) {
                pts.iter_mut().for_each(|p| p.sigma = 0.0);
            }
            (k, pts)
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum FitKind {
    /// Entropy against system size.
    Scaling,
    /// Entropy against measurement rate, one curve per size.
    Lorentzian,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitSpec {
    pub kind: FitKind,
    /// Defaults to the first observable in the table.
    pub observable: Option<String>,
    pub fix_b: Option<f64>,
    /// Only rates below this enter the `L0(gamma)` power law.
    pub gamma_max: f64,
    pub bootstrap_seed: u64,
}

impl Default for FitSpec {
    fn default() -> Self {
        Self { kind: FitKind::Scaling, observable: None, fix_b: None, gamma_max: f64::INFINITY, bootstrap_seed: 0 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GroupFit<T> {
    pub group: GroupKey,
    pub n_points: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit: Option<T>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip)]
    pub data: Vec<DataPoint>,
}

#[derive(Clone, Debug, Serialize)]
pub struct L0Scaling {
    pub group: GroupKey,
    pub fit: PowerLawFit,
    /// 95% residual-bootstrap interval of the exponent.
    pub interval: Option<(f64, f64)>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScalingSummary {
    pub group: GroupKey,
    pub scalings: ParameterScalings,
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FitGroups {
    Scaling { groups: Vec<GroupFit<FitResult>>, l0_scaling: Vec<L0Scaling> },
    Lorentzian { groups: Vec<GroupFit<LorentzianFit>>, parameter_scalings: Vec<ScalingSummary> },
}

#[derive(Clone, Debug, Serialize)]
pub struct FitReport {
    pub config_hash: String,
    pub master_seed: u64,
    pub observable: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fix_b: Option<f64>,
    #[serde(flatten)]
    pub groups: FitGroups,
}

fn pick_observable(table: &ResultTable, requested: Option<&str>) -> Result<String> {
    match requested {
        Some(o) if table.rows.iter().any(|r| r.observable == o) => Ok(o.into()),
        Some(o) => Err(CliError::MissingData(format!("no rows for observable `{o}`"))),
        None => table
            .rows
            .first()
            .map(|r| r.observable.clone())
            .ok_or_else(|| CliError::MissingData("the table has no rows".into())),
    }
}

/// Fit every group; fails only when no group could be fitted.
fn fit_groups<T>(
    groups: Vec<(GroupKey, Vec<DataPoint>)>,
    fit: impl Fn(&[DataPoint]) -> fermon_fit::Result<T>,
) -> Result<Vec<GroupFit<T>>> {
    let mut first_err: Option<FitError> = None;
    let out: Vec<GroupFit<T>> = groups
        .into_iter()
        .map(|(group, data)| {
            let (fit, error) = match fit(&data) {
                Ok(f) => (Some(f), None),
                Err(e) => {
                    let msg = e.to_string();
                    first_err.get_or_insert(e);
                    (None, Some(msg))
                }
            };
            GroupFit { group, n_points: data.len(), fit, error, data }
        })
        .collect();
    if out.iter().all(|g| g.fit.is_none()) {
        return Err(match first_err {
            Some(e) => CliError::Fit(e),
            None => CliError::MissingData("no rows along the fit axis".into()),
        });
    }
    Ok(out)
}

pub fn fit_table(table: &ResultTable, spec: &FitSpec) -> Result<FitReport> {
    let observable = pick_observable(table, spec.observable.as_deref())?;
    let groups = match spec.kind {
        FitKind::Scaling => {
            let groups = fit_groups(group_rows(&table.rows, &observable, Axis::L), |d| fit_scaling(d, spec.fix_b))?;
            let l0_scaling = l0_scalings(&groups, spec);
            FitGroups::Scaling { groups, l0_scaling }
        }
        FitKind::Lorentzian => {
            let groups = fit_groups(group_rows(&table.rows, &observable, Axis::Gamma), fit_lorentzian)?;
            let parameter_scalings = lorentzian_scalings(&groups);
            FitGroups::Lorentzian { groups, parameter_scalings }
        }
    };
    Ok(FitReport {
        config_hash: table.config_hash.clone(),
        master_seed: table.master_seed,
        observable,
        fix_b: spec.fix_b,
        groups,
    })
}

fn without_gamma(k: &GroupKey) -> GroupKey {
    GroupKey { gamma: None, ..k.clone() }
}

fn without_l(k: &GroupKey) -> GroupKey {
    GroupKey { l: None, ..k.clone() }
}

/// `L0` against `gamma` for every family of scaling fits that differ only in
/// the rate.
fn l0_scalings(groups: &[GroupFit<FitResult>], spec: &FitSpec) -> Vec<L0Scaling> {
    let mut families: Vec<(GroupKey, Vec<(f64, f64)>)> = Vec::new();
    for g in groups {
        let (Some(fit), Some(gamma)) = (&g.fit, g.group.gamma) else { continue };
        if !(fit.l0.is_finite() && fit.l0 > 0.0 && gamma > 0.0) {
            continue;
        }
        let key = without_gamma(&g.group);
        match families.iter_mut().find(|(k, _)| *k == key) {
            Some((_, pts)) => pts.push((gamma, fit.l0)),
            None => families.push((key, vec![(gamma, fit.l0)])),
        }
    }
    families
        .into_iter()
        .filter_map(|(group, pts)| {
            let fit = fit_l0_powerlaw(&pts, spec.gamma_max).ok()?;
            let interval =
                bootstrap_exponent_interval(&pts, spec.gamma_max, BOOTSTRAP_REPLICATES, 0.95, spec.bootstrap_seed).ok();
            Some(L0Scaling { group, fit, interval })
        })
        .collect()
}

/// Size dependence of the Lorentzian parameters for every family with at
/// least four sizes.
fn lorentzian_scalings(groups: &[GroupFit<LorentzianFit>]) -> Vec<ScalingSummary> {
    let mut families: Vec<(GroupKey, [Vec<DataPoint>; 3])> = Vec::new();
    for g in groups {
        let (Some(fit), Some(l)) = (&g.fit, g.group.l) else { continue };
        let key = without_l(&g.group);
        let est = fit.estimates();
        let pts: [DataPoint; 3] = std::array::from_fn(|i| DataPoint::new(l as f64, est[i].value, est[i].stderr));
        match families.iter_mut().find(|(k, _)| *k == key) {
            Some((_, sets)) => sets.iter_mut().zip(pts).for_each(|(s, p)| s.push(p)),
            None => families.push((key, pts.map(|p| vec![p]))),
        }
    }
    families
        .into_iter()
        .filter_map(|(group, mut sets)| {
            for set in &mut sets {
                if set.iter().any(|p| !(p.sigma > 0.0 && p.sigma.is_finite())) {
                    set.iter_mut().for_each(|p| p.sigma = 0.0);
                }
            }
            let scalings = fit_parameter_scalings(&sets[0], &sets[1], &sets[2]).ok()?;
            Some(ScalingSummary { group, scalings })
        })
        .collect()
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
}

/// Long-format plot data: `group, series, x, y, stderr`. Series are `data`,
/// `fit` and the asymptotes of each model.
pub fn plot_csv(report: &FitReport) -> Result<Vec<u8>> {
    let mut out = format!("# config_hash={} master_seed={}\n", report.config_hash, report.master_seed).into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut out);
        w.write_record(["group", "series", "x", "y", "stderr"])?;
        let mut emit = |label: &str, data: &[DataPoint], curves: &[(&str, &dyn Fn(f64) -> f64)]| -> Result<()> {
            for p in data {
                w.write_record([label, "data", &p.x.to_string(), &p.y.to_string(), &p.sigma.to_string()])?;
            }
            let lo = data.iter().map(|p| p.x).fold(f64::INFINITY, f64::min);
            let hi = data.iter().map(|p| p.x).fold(0.0, f64::max);
            for x in log_grid(lo, hi, CURVE_SAMPLES) {
                for (name, f) in curves {
                    w.write_record([label, name, &x.to_string(), &f(x).to_string(), ""])?;
                }
            }
            Ok(())
        };
        match &report.groups {
            FitGroups::Scaling { groups, .. } => {
                for g in groups {
                    let Some(fit) = &g.fit else { continue };
                    emit(
                        &g.group.label(),
                        &g.data,
                        &[
                            ("fit", &|l| fit.evaluate(l)),
                            ("linear_asymptote", &|l| fit.linear_asymptote(l)),
                            ("power_asymptote", &|l| fit.power_asymptote(l)),
                        ],
                    )?;
                }
            }
            FitGroups::Lorentzian { groups, .. } => {
                for g in groups {
                    let Some(fit) = &g.fit else { continue };
                    emit(
                        &g.group.label(),
                        &g.data,
                        &[
                            ("fit", &|x| fit.evaluate(x)),
                            ("plateau", &|_| fit.k),
                            ("power_tail", &|x| fit.k / (fit.q * x.powf(fit.beta))),
                        ],
                    )?;
                }
            }
        }
        w.flush().map_err(CliError::io("plot"))?;
    }
    Ok(out)
}

/// Write `fit_report.json` and `fit_plot.csv` into `out`.
pub fn write_fit(report: &FitReport, out: &Path) -> Result<()> {
    std::fs::create_dir_all(out).map_err(CliError::io(out))?;
    write_atomic(&out.join("fit_report.json"), &serde_json::to_vec_pretty(report)?)?;
    write_atomic(&out.join("fit_plot.csv"), &plot_csv(report)?)
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepGroup {
    pub group: GroupKey,
    pub sweep: Option<StabilitySweep>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepReport {
    pub config_hash: String,
    pub master_seed: u64,
    pub observable: String,
    pub groups: Vec<SweepGroup>,
}

/// Fit window stability: every `[L_min, L_max]` window over the sizes in the
/// table, per parameter group.
pub fn sweep_table(table: &ResultTable, observable: Option<&str>, fix_b: Option<f64>) -> Result<SweepReport> {
    let observable = pick_observable(table, observable)?;
    let groups: Vec<SweepGroup> = group_rows(&table.rows, &observable, Axis::L)
        .into_iter()
        .map(|(group, data)| {
            let mut grid: Vec<f64> = data.iter().map(|p| p.x).collect();
            grid.dedup();
            match stability_sweep(&data, &grid, &grid, fix_b) {
                Ok(s) => SweepGroup { group, sweep: Some(s), error: None },
                Err(e) => SweepGroup { group, sweep: None, error: Some(e.to_string()) },
            }
        })
        .collect();
    if groups.iter().all(|g| g.sweep.as_ref().is_none_or(|s| s.cells.iter().flatten().all(Option::is_none))) {
        return Err(CliError::MissingData("no size window holds enough points for a fit".into()));
    }
    Ok(SweepReport { config_hash: table.config_hash.clone(), master_seed: table.master_seed, observable, groups })
}

/// `group, l_min, l_max, b, sigma_b, regime`, one line per fitted window.
pub fn b_surface_csv(report: &SweepReport) -> Result<Vec<u8>> {
    let mut out = format!("# config_hash={} master_seed={}\n", report.config_hash, report.master_seed).into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut out);
        w.write_record(["group", "l_min", "l_max", "b", "sigma_b", "regime"])?;
        for g in &report.groups {
            let Some(s) = &g.sweep else { continue };
            for (i, lmin) in s.l_min_grid.iter().enumerate() {
                for (j, lmax) in s.l_max_grid.iter().enumerate() {
                    if let Some(fit) = &s.cells[i][j] {
                        w.write_record([
                            g.group.label(),
                            lmin.to_string(),
                            lmax.to_string(),
                            fit.b.to_string(),
                            fit.sigma_b().to_string(),
                            format!("{:?}", fit.regime).to_lowercase(),
                        ])?;
                    }
                }
            }
        }
        w.flush().map_err(CliError::io("b surface"))?;
    }
    Ok(out)
}

pub fn write_sweep(report: &SweepReport, out: &Path) -> Result<()> {
    std::fs::create_dir_all(out).map_err(CliError::io(out))?;
    write_atomic(&out.join("sweep_report.json"), &serde_json::to_vec_pretty(report)?)?;
    write_atomic(&out.join("b_surface.csv"), &b_surface_csv(report)?)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PageReference {
    pub l: usize,
    pub samples: usize,
    pub seed: u64,
    pub ell: usize,
    pub mean: f64,
    pub sd: f64,
}

/// Half-chain entropy of equal-amplitude random-phase states on the
/// half-filled sector.
pub fn page_ref(l: usize, samples: usize, seed: u64) -> Result<PageReference> {
    let (mean, sd) = fermon_core::ed::page_reference(l, samples, seed)
        .map_err(|source| CliError::Engine { context: format!("page reference at L={l}"), source })?;
    Ok(PageReference { l, samples, seed, ell: l / 2, mean, sd })
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub directory: String,
    pub config_hash: String,
    pub master_seed: u64,
    pub model: String,
    pub points: usize,
    pub done: usize,
    pub failed: usize,
    pub pending: usize,
    pub rows: usize,
    pub files_verified: usize,
    pub failures: Vec<(usize, String)>,
}

/// Summarize a run directory after checking every recorded file hash.
pub fn report(dir: &Path) -> Result<RunReport> {
    let m = Manifest::read(dir)?;
    m.verify_files(dir)?;
    let table = ResultTable::read(&dir.join(crate::manifest::RESULTS))?;
    Ok(RunReport {
        directory: dir.display().to_string(),
        config_hash: m.config_hash.clone(),
        master_seed: m.master_seed,
        model: m.config.model.name().into(),
        points: m.points.len(),
        done: m.count(PointStatus::Done),
        failed: m.count(PointStatus::Failed),
        pending: m.count(PointStatus::Pending),
        rows: table.rows.len(),
        files_verified: m.files.len(),
        failures: m
            .points
            .iter()
            .filter_map(|p| p.error.as_ref().map(|e| (p.index, e.clone())))
            .collect(),
    })
}
