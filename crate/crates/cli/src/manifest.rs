//! `manifest.json`: the checkpoint of a run directory.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{RunConfig, SweepPoint};
use crate::error::{CliError, Result};
use crate::table::write_atomic;

pub const MANIFEST: &str = "manifest.json";
pub const RESULTS: &str = "results.csv";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointStatus {
    Pending,
    Done,
    Failed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointRecord {
    pub index: usize,
    pub point: SweepPoint,
    pub status: PointStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Choices the model leaves open, recorded with every run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Conventions {
    pub window_start: String,
    pub stderr: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_u: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub syk_disorder: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub tool_version: String,
    pub config_hash: String,
    pub master_seed: u64,
    pub noise_algorithm: String,
    pub conventions: Conventions,
    pub config: RunConfig,
    pub points: Vec<PointRecord>,
    /// SHA-256 of every data file, keyed by path relative to the run directory.
    pub files: BTreeMap<String, String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl Manifest {
    pub fn new(config: &RunConfig) -> Self {
        use crate::config::ModelConfig;
        let window_start = match (&config.model, config.schedule.and_then(|s| s.t_0)) {
            (ModelConfig::Ladder { n_st, .. }, _) => format!("cycle {n_st} (after the transient)"),
            (_, Some(t0)) => format!("t_0 = {t0} (configured)"),
            (_, None) => "t_0 = t_f / 2 (default)".into(),
        };
        let (tau_u, syk_disorder) = match &config.model {
            ModelConfig::Ladder { tau_u, .. } => (Some(*tau_u), None),
            ModelConfig::Syk { disorder, .. } => (None, Some(disorder.name().into())),
            _ => (None, None),
        };
        Self {
            format_version: FORMAT_VERSION,
            tool_version: env!("CARGO_PKG_VERSION").into(),
            config_hash: config.hash(),
            master_seed: config.ensemble.master_seed,
            noise_algorithm: fermon_core::NoiseStream::new(0, 0).algorithm_tag().into(),
            conventions: Conventions {
                window_start,
                stderr: "sample standard deviation of trajectory window averages / sqrt(n_traj)".into(),
                tau_u,
                syk_disorder,
            },
            config: config.clone(),
            points: config
                .sweep_points()
                .into_iter()
                .enumerate()
                .map(|(index, point)| PointRecord { index, point, status: PointStatus::Pending, error: None })
                .collect(),
            files: BTreeMap::new(),
        }
    }

    pub fn read(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST);
        let text = std::fs::read_to_string(&path).map_err(|e| {
            if e.kind() == std::io::ErrorKind::NotFound {
                CliError::CorruptCheckpoint(format!("{} is missing", path.display()))
            } else {
                CliError::io(&path)(e)
            }
        })?;
        let m: Manifest = serde_json::from_str(&text)
            .map_err(|e| CliError::CorruptCheckpoint(format!("{}: {e}", path.display())))?;
        if m.format_version != FORMAT_VERSION {
            return Err(CliError::CorruptCheckpoint(format!("unknown format version {}", m.format_version)));
        }
        if m.config.hash() != m.config_hash {
            return Err(CliError::CorruptCheckpoint("stored config does not match the stored hash".into()));
        }
        let expected = m.config.sweep_points();
        if m.points.len() != expected.len()
            || m.points.iter().zip(&expected).enumerate().any(|(i, (r, p))| r.index != i || r.point != *p)
        {
            return Err(CliError::CorruptCheckpoint("point list does not match the stored config".into()));
        }
        Ok(m)
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let bytes = serde_json::to_vec_pretty(self)?;
        write_atomic(&dir.join(MANIFEST), &bytes)
    }

    /// Check every recorded file against its hash.
    pub fn verify_files(&self, dir: &Path) -> Result<()> {
        for (name, hash) in &self.files {
            let path = dir.join(name);
            let bytes = std::fs::read(&path)
                .map_err(|e| CliError::CorruptCheckpoint(format!("{}: {e}", path.display())))?;
            if sha256_hex(&bytes) != *hash {
                return Err(CliError::CorruptCheckpoint(format!("{name} does not match its recorded hash")));
            }
        }
        Ok(())
    }

    pub fn count(&self, status: PointStatus) -> usize {
        self.points.iter().filter(|p| p.status == status).count()
    }
}
