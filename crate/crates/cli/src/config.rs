//! Run configuration: one TOML file per run.
//!
//! ```toml
//! observables = ["entropy_half"]
//!
//! [model]
//! kind = "tight_binding"
//! j = 1.0
//!
//! [schedule]
//! dt = 0.05
//! t_f = 200.0
//! stride = 20
//!
//! [ensemble]
//! n_traj = 48
//! master_seed = 1
//!
//! [sweep]
//! l = [16, 32, 64]
//! gamma = [0.5, 1.0]
//! ```

use std::fmt;
use std::path::{Path, PathBuf};

use fermon_core::ed::{MAX_SITES, MAX_SYK_SITES};
use fermon_core::{Observable, StepSchedule};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

/// Environment variable holding the root for relative output directories.
pub const OUTPUT_ROOT_ENV: &str = "FERMON_OUTPUT_ROOT";

fn one() -> f64 {
    1.0
}

fn half_pi() -> f64 {
    std::f64::consts::FRAC_PI_2
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    TightBinding {
        #[serde(default = "one")]
        j: f64,
    },
    KitaevOnsite {
        #[serde(default = "one")]
        j: f64,
        h: f64,
    },
    KitaevLongrange {
        #[serde(default = "one")]
        j: f64,
        h: f64,
        alpha: f64,
    },
    Tv {
        #[serde(default = "one")]
        t: f64,
        #[serde(default = "one")]
        w: f64,
        #[serde(default = "one")]
        v: f64,
    },
    Syk {
        #[serde(default = "one")]
        j: f64,
        #[serde(default)]
        disorder: SykDisorder,
    },
    Ladder {
        #[serde(default = "one")]
        t1: f64,
        t2: f64,
        #[serde(default = "half_pi")]
        t12: f64,
        p1: f64,
        p2: f64,
        #[serde(default = "one")]
        tau_u: f64,
        n_st: usize,
        m: usize,
    },
}

impl ModelConfig {
    pub fn name(&self) -> &'static str {
        match self {
            ModelConfig::TightBinding { .. } => "tight_binding",
            ModelConfig::KitaevOnsite { .. } => "kitaev_onsite",
            ModelConfig::KitaevLongrange { .. } => "kitaev_longrange",
            ModelConfig::Tv { .. } => "tv",
            ModelConfig::Syk { .. } => "syk",
            ModelConfig::Ladder { .. } => "ladder",
        }
    }

    fn is_ladder(&self) -> bool {
        matches!(self, ModelConfig::Ladder { .. })
    }

    fn is_ed(&self) -> bool {
        matches!(self, ModelConfig::Tv { .. } | ModelConfig::Syk { .. })
    }
}

/// How coupling realizations are paired with trajectories.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SykDisorder {
    /// Trajectory `i` draws its couplings from seed `master_seed + i`, so
    /// disorder and noise are averaged jointly.
    #[default]
    PerTrajectory,
    /// One realization from seed `master_seed` shared by all trajectories.
    Shared,
}

impl SykDisorder {
    pub fn name(&self) -> &'static str {
        match self {
            SykDisorder::PerTrajectory => "per_trajectory",
            SykDisorder::Shared => "shared",
        }
    }
}

/// Observables named independently of the system size.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObservableSpec {
    EntropyHalf,
    EntropyQuarter,
    Ipr,
    LnIpr,
    /// Ladder only: negativity between the two halves of the System.
    Fln,
}

impl ObservableSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ObservableSpec::EntropyHalf => "entropy_half",
            ObservableSpec::EntropyQuarter => "entropy_quarter",
            ObservableSpec::Ipr => "ipr",
            ObservableSpec::LnIpr => "ln_ipr",
            ObservableSpec::Fln => "fln",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [Self::EntropyHalf, Self::EntropyQuarter, Self::Ipr, Self::LnIpr, Self::Fln].into_iter().find(|o| o.name() == s)
    }

    /// The engine observable at system size `l`; `None` for the ladder FLN.
    pub fn resolve(&self, l: usize) -> Option<Observable> {
        match self {
            ObservableSpec::EntropyHalf => Some(Observable::Entropy { ell: l / 2 }),
            ObservableSpec::EntropyQuarter => Some(Observable::Entropy { ell: l / 4 }),
            ObservableSpec::Ipr => Some(Observable::Ipr),
            ObservableSpec::LnIpr => Some(Observable::LogIpr),
            ObservableSpec::Fln => None,
        }
    }
}

impl fmt::Display for ObservableSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    pub dt: f64,
    pub t_f: f64,
    /// Start of the averaging window; defaults to `t_f / 2`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_0: Option<f64>,
    #[serde(default = "default_stride")]
    pub stride: usize,
}

fn default_stride() -> usize {
    10
}

impl ScheduleConfig {
    pub fn schedule(&self) -> Result<StepSchedule> {
        let s = match self.t_0 {
            Some(t0) => StepSchedule::with_window(self.dt, self.t_f, t0, self.stride),
            None => StepSchedule::new(self.dt, self.t_f, self.stride),
        };
        s.map_err(|e| CliError::Config(format!("schedule: {e}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleConfig {
    pub n_traj: usize,
    #[serde(default)]
    pub master_seed: u64,
}

/// Lists swept as a Cartesian product. `l` and `gamma` are axes (an empty
/// list means an empty sweep); the others override the model value when
/// non-empty.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default)]
    pub l: Vec<usize>,
    #[serde(default)]
    pub gamma: Vec<f64>,
    #[serde(default)]
    pub alpha: Vec<f64>,
    #[serde(default)]
    pub h: Vec<f64>,
    #[serde(default)]
    pub p1: Vec<f64>,
    #[serde(default)]
    pub p2: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Relative paths are resolved against `$FERMON_OUTPUT_ROOT` (or the
    /// working directory). Defaults to `runs/<hash prefix>`.
    #[serde(default)]
    pub directory: Option<PathBuf>,
    /// Write the ensemble mean series of every point.
    #[serde(default = "yes")]
    pub time_series: bool,
    /// Also write every trajectory's series.
    #[serde(default)]
    pub trajectory_series: bool,
}

fn yes() -> bool {
    true
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { directory: None, time_series: true, trajectory_series: false }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub observables: Vec<ObservableSpec>,
    pub model: ModelConfig,
    #[serde(default)]
    pub schedule: Option<ScheduleConfig>,
    pub ensemble: EnsembleConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

/// One parameter point of a sweep. Fields a model does not use are `None`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub l: usize,
    pub gamma: Option<f64>,
    pub alpha: Option<f64>,
    pub h: Option<f64>,
    pub p1: Option<f64>,
    pub p2: Option<f64>,
}

impl fmt::Display for SweepPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "L={}", self.l)?;
        for (name, v) in [("gamma", self.gamma), ("alpha", self.alpha), ("h", self.h), ("p1", self.p1), ("p2", self.p2)] {
            if let Some(v) = v {
                write!(f, " {name}={v}")?;
            }
        }
        Ok(())
    }
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(CliError::Config(msg()))
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        if cfg.observables.is_empty() {
            cfg.observables =
                vec![if cfg.model.is_ladder() { ObservableSpec::Fln } else { ObservableSpec::EntropyHalf }];
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let m = &self.model;
        let finite = |name: &str, x: f64| check(x.is_finite(), || format!("{name} must be finite, got {x}"));
        let non_negative = |name: &str, x: f64| check(x >= 0.0 && x.is_finite(), || format!("{name} must be >= 0, got {x}"));
        let probability = |name: &str, x: f64| check((0.0..=1.0).contains(&x), || format!("{name} must lie in [0, 1], got {x}"));
        match *m {
            ModelConfig::TightBinding { j } | ModelConfig::Syk { j, .. } => finite("j", j)?,
            ModelConfig::KitaevOnsite { j, h } => {
                finite("j", j)?;
                finite("h", h)?;
            }
            ModelConfig::KitaevLongrange { j, h, alpha } => {
                finite("j", j)?;
                finite("h", h)?;
                non_negative("alpha", alpha)?;
            }
            ModelConfig::Tv { t, w, v } => {
                finite("t", t)?;
                finite("w", w)?;
                finite("v", v)?;
            }
            ModelConfig::Ladder { t1, t2, t12, p1, p2, tau_u, m, .. } => {
                for (n, x) in [("t1", t1), ("t2", t2), ("t12", t12)] {
                    finite(n, x)?;
                }
                probability("p1", p1)?;
                probability("p2", p2)?;
                check(tau_u > 0.0 && tau_u.is_finite(), || format!("tau_u must be positive, got {tau_u}"))?;
                check(m >= 1, || "m must be >= 1".into())?;
            }
        }

        let s = &self.sweep;
        let uses = |field: &str| -> bool {
            match field {
                "gamma" => !m.is_ladder(),
                "alpha" => matches!(m, ModelConfig::KitaevLongrange { .. }),
                "h" => matches!(m, ModelConfig::KitaevOnsite { .. } | ModelConfig::KitaevLongrange { .. }),
                "p1" | "p2" => m.is_ladder(),
                _ => true,
            }
        };
        for (field, empty) in [
            ("gamma", s.gamma.is_empty()),
            ("alpha", s.alpha.is_empty()),
            ("h", s.h.is_empty()),
            ("p1", s.p1.is_empty()),
            ("p2", s.p2.is_empty()),
        ] {
            check(empty || uses(field), || format!("sweep.{field} is not a parameter of {}", m.name()))?;
        }
        for &g in &s.gamma {
            non_negative("gamma", g)?;
        }
        for &a in &s.alpha {
            non_negative("alpha", a)?;
        }
        for &h in &s.h {
            finite("h", h)?;
        }
        for &p in s.p1.iter().chain(&s.p2) {
            probability("p", p)?;
        }
        for &l in &s.l {
            let limit = match m {
                ModelConfig::Tv { .. } => MAX_SITES,
                ModelConfig::Syk { .. } => MAX_SYK_SITES,
                _ => 1 << 14,
            };
            if m.is_ladder() {
                check(l >= 2, || format!("ladder needs L >= 2, got {l}"))?;
            } else {
                check(l >= 2 && l % 2 == 0, || format!("L must be even and >= 2, got {l}"))?;
            }
            check(l <= limit, || format!("L = {l} exceeds the limit {limit} of {}", m.name()))?;
            if self.observables.contains(&ObservableSpec::EntropyQuarter) {
                check(l >= 4, || format!("entropy_quarter needs L >= 4, got {l}"))?;
            }
        }

        for o in &self.observables {
            let ok = match o {
                ObservableSpec::Fln => m.is_ladder(),
                ObservableSpec::Ipr | ObservableSpec::LnIpr => m.is_ed(),
                _ => !m.is_ladder(),
            };
            check(ok, || format!("observable {o} is not available for {}", m.name()))?;
        }
        check(self.ensemble.n_traj >= 1, || "ensemble.n_traj must be >= 1".into())?;
        match (&self.schedule, m.is_ladder()) {
            (Some(s), false) => {
                s.schedule()?;
            }
            (None, false) => return Err(CliError::Config(format!("{} needs a [schedule] block", m.name()))),
            (Some(_), true) => return Err(CliError::Config("the ladder runs in cycles (n_st, m); drop [schedule]".into())),
            (None, true) => {}
        }
        Ok(())
    }

    /// Sweep points in a fixed order: `L` outermost, then `gamma`, `alpha`,
    /// `h`, `p1`, `p2`.
    pub fn sweep_points(&self) -> Vec<SweepPoint> {
        let s = &self.sweep;
        let axis = |list: &[f64], base: Option<f64>| -> Vec<Option<f64>> {
            if list.is_empty() {
                vec![base]
            } else {
                list.iter().map(|&x| Some(x)).collect()
            }
        };
        let (alpha, h, p1, p2) = match self.model {
            ModelConfig::KitaevOnsite { h, .. } => (None, Some(h), None, None),
            ModelConfig::KitaevLongrange { h, alpha, .. } => (Some(alpha), Some(h), None, None),
            ModelConfig::Ladder { p1, p2, .. } => (None, None, Some(p1), Some(p2)),
            _ => (None, None, None, None),
        };
        let gammas: Vec<Option<f64>> =
            if self.model.is_ladder() { vec![None] } else { s.gamma.iter().map(|&g| Some(g)).collect() };
        let mut out = Vec::new();
        for &l in &s.l {
            for &gamma in &gammas {
                for &alpha in &axis(&s.alpha, alpha) {
                    for &h in &axis(&s.h, h) {
                        for &p1 in &axis(&s.p1, p1) {
                            for &p2 in &axis(&s.p2, p2) {
                                out.push(SweepPoint { l, gamma, alpha, h, p1, p2 });
                            }
                        }
                    }
                }
            }
        }
        out
    }

    /// SHA-256 over everything except the output block, so moving a run
    /// does not change its identity.
    pub fn hash(&self) -> String {
        #[derive(Serialize)]
        struct Identity<'a> {
            observables: &'a [ObservableSpec],
            model: &'a ModelConfig,
            schedule: &'a Option<ScheduleConfig>,
            ensemble: &'a EnsembleConfig,
            sweep: &'a SweepConfig,
        }
        let id = Identity {
            observables: &self.observables,
            model: &self.model,
            schedule: &self.schedule,
            ensemble: &self.ensemble,
            sweep: &self.sweep,
        };
        let bytes = serde_json::to_vec(&id).expect("config serializes");
        hex::encode(Sha256::digest(bytes))
    }

    /// Where this run writes its files.
    pub fn output_dir(&self) -> PathBuf {
        let root = std::env::var_os(OUTPUT_ROOT_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("."));
        match &self.output.directory {
            Some(d) if d.is_absolute() => d.clone(),
            Some(d) => root.join(d),
            None => root.join("runs").join(&self.hash()[..12]),
        }
    }
}
