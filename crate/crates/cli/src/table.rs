//! Result tables on disk.
//!
//! `results.csv` starts with a `# config_hash=<hex> master_seed=<n>` line
//! followed by a header and one row per (sweep point, observable). The
//! column order is fixed:
//!
//! `point, model, l, gamma, alpha, h, p1, p2, observable, steady_value,
//! stderr, t0, tf, n_traj, master_seed, drift_slope`
//!
//! Parameters a model does not have are left empty. For the ladder `t0` and
//! `tf` count cycles.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const COLUMNS: [&str; 16] = [
    "point",
    "model",
    "l",
    "gamma",
    "alpha",
    "h",
    "p1",
    "p2",
    "observable",
    "steady_value",
    "stderr",
    "t0",
    "tf",
    "n_traj",
    "master_seed",
    "drift_slope",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub point: usize,
    pub model: String,
    pub l: usize,
    pub gamma: Option<f64>,
    pub alpha: Option<f64>,
    pub h: Option<f64>,
    pub p1: Option<f64>,
    pub p2: Option<f64>,
    pub observable: String,
    pub steady_value: f64,
    pub stderr: f64,
    pub t0: f64,
    pub tf: f64,
    pub n_traj: usize,
    pub master_seed: u64,
    pub drift_slope: Option<f64>,
}

/// A results table with its provenance line.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ResultTable {
    pub config_hash: String,
    pub master_seed: u64,
    pub rows: Vec<ResultRow>,
}

fn provenance_line(hash: &str, seed: u64) -> String {
    format!("# config_hash={hash} master_seed={seed}\n")
}

impl ResultTable {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = provenance_line(&self.config_hash, self.master_seed).into_bytes();
        {
            let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(&mut out);
            w.write_record(COLUMNS)?;
            for row in &self.rows {
                w.serialize(row)?;
            }
            w.flush().map_err(CliError::io("results.csv"))?;
        }
        Ok(out)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(CliError::io(path))?;
        Self::from_reader(file).map_err(|e| match e {
            CliError::MissingData(m) => CliError::MissingData(format!("{}: {m}", path.display())),
            e => e,
        })
    }

    pub fn from_reader(reader: impl Read) -> Result<Self> {
        let mut reader = BufReader::new(reader);
        let mut first = String::new();
        reader.read_line(&mut first).map_err(CliError::io("results table"))?;
        let (config_hash, master_seed) = parse_provenance(&first)
            .ok_or_else(|| CliError::MissingData("table lacks the `# config_hash=` provenance line".into()))?;
        let mut csv = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let header: Vec<String> = csv.headers()?.iter().map(str::to_owned).collect();
        if header != COLUMNS {
            return Err(CliError::MissingData(format!("unexpected columns {header:?}")));
        }
        let rows = csv.deserialize().collect::<std::result::Result<Vec<ResultRow>, _>>()?;
        Ok(Self { config_hash, master_seed, rows })
    }
}

fn parse_provenance(line: &str) -> Option<(String, u64)> {
    let rest = line.trim().strip_prefix("# ")?;
    let mut hash = None;
    let mut seed = None;
    for field in rest.split_whitespace() {
        match field.split_once('=')? {
            ("config_hash", v) => hash = Some(v.to_owned()),
            ("master_seed", v) => seed = v.parse().ok(),
            _ => {}
        }
    }
    Some((hash?, seed?))
}

/// Long-format ensemble series: `time, observable, value, stderr`.
pub fn series_bytes(
    hash: &str,
    seed: u64,
    times: &[f64],
    observables: &[String],
    mean: &[Vec<f64>],
    stderr: &[Vec<f64>],
) -> Result<Vec<u8>> {
    let mut out = provenance_line(hash, seed).into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut out);
        w.write_record(["time", "observable", "value", "stderr"])?;
        for (k, name) in observables.iter().enumerate() {
            for (s, t) in times.iter().enumerate() {
                w.write_record([t.to_string(), name.clone(), mean[k][s].to_string(), stderr[k][s].to_string()])?;
            }
        }
        w.flush().map_err(CliError::io("series"))?;
    }
    Ok(out)
}

/// Per-trajectory series: `trajectory, time, observable, value`.
pub fn trajectory_series_bytes(
    hash: &str,
    seed: u64,
    observables: &[String],
    series: &[fermon_core::TimeSeries],
) -> Result<Vec<u8>> {
    let mut out = provenance_line(hash, seed).into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut out);
        w.write_record(["trajectory", "time", "observable", "value"])?;
        for (i, ts) in series.iter().enumerate() {
            for (k, name) in observables.iter().enumerate() {
                for (s, t) in ts.times.iter().enumerate() {
                    w.write_record([i.to_string(), t.to_string(), name.clone(), ts.values[k][s].to_string()])?;
                }
            }
        }
        w.flush().map_err(CliError::io("series"))?;
    }
    Ok(out)
}

/// Write through a temporary file and rename, so readers never see a
/// half-written file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    let mut f = std::fs::File::create(&tmp).map_err(CliError::io(&tmp))?;
    f.write_all(bytes).map_err(CliError::io(&tmp))?;
    f.sync_all().map_err(CliError::io(&tmp))?;
    std::fs::rename(&tmp, path).map_err(CliError::io(path))
}
