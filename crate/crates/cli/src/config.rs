use std::path::{Path, PathBuf};

use ncvx::algorithms::SgdSchedule;
use ncvx::functions::FamilySpec;
use ncvx::properties::{DEFAULT_TOL, FD_TOL, SMOOTH_TOL};
use ncvx::FamilyKind;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Raised for malformed or incomplete configurations (exit code 2).
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage<T>(msg: impl Into<String>) -> anyhow::Result<T> {
    Err(UsageError(msg.into()).into())
}

/// One experiment description. Every section is optional; each subcommand
/// reads the sections it needs and rejects the config if they are missing.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<FamilySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<Counterexample>,
    /// Algorithm swept by `rate-sweep`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub algorithm: Option<AlgorithmKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sgd: Option<SgdSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bisect: Option<BisectSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub game: Option<GameSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lower_bound: Option<BoundSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verify: Option<VerifySpec>,
    /// Horizon (budget) grid `T`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub horizons: Vec<u64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub seeds: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Counterexample {
    EbNotRsi,
    RsiNotStarsc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlgorithmKind {
    Sgd,
    Bisect,
}

impl std::fmt::Display for AlgorithmKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            AlgorithmKind::Sgd => "sgd",
            AlgorithmKind::Bisect => "bisect",
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SgdSpec {
    /// Defaults to the family's own schedule.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<SgdSchedule>,
    /// Start point, zero-padded to `d`; the origin if absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x1: Option<Vec<f64>>,
    /// Which family member to optimize.
    #[serde(default)]
    pub instance: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Objective1d {
    /// `(c/2)(x − center)²`
    Quadratic { curvature: f64, center: f64 },
    /// The piecewise 1-RSI counterexample shifted to `shift`.
    Piecewise { shift: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BisectSpec {
    pub mu: f64,
    #[serde(alias = "L")]
    pub l: f64,
    #[serde(alias = "D")]
    pub d_cap: f64,
    pub sigma: f64,
    pub delta: f64,
    /// Used when `horizons` is empty; defaults to the smallest valid budget.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<u64>,
    pub objective: Objective1d,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Player {
    Clairvoyant,
    Blind,
    Sgd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameSpec {
    pub algorithm: Player,
    pub trials: usize,
    pub horizon: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<SgdSchedule>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundSpec {
    pub kind: FamilyKind,
    pub mu: f64,
    #[serde(default = "one")]
    pub tau: f64,
    #[serde(alias = "L")]
    pub l: f64,
    pub sigma: f64,
    #[serde(default, alias = "D")]
    pub d_cap: f64,
    /// Ambient dimension; defaults to the family threshold.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[serde(default = "qc_t_constant")]
    pub qc_t_constant: f64,
}

fn one() -> f64 {
    1.0
}

fn qc_t_constant() -> f64 {
    ncvx::lowerbound::QC_T_CONSTANT
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySpec {
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Class parameters to check instead of the certified ones.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(default, alias = "L", skip_serializing_if = "Option::is_none")]
    pub l: Option<f64>,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "smooth_tol")]
    pub smooth_tol: f64,
    #[serde(default = "fd_tol")]
    pub fd_tol: f64,
    #[serde(default = "fd_step")]
    pub fd_step: f64,
    #[serde(default)]
    pub seed: u64,
}

impl Default for VerifySpec {
    fn default() -> Self {
        VerifySpec {
            samples: default_samples(),
            tau: None,
            mu: None,
            l: None,
            tol: DEFAULT_TOL,
            smooth_tol: SMOOTH_TOL,
            fd_tol: FD_TOL,
            fd_step: fd_step(),
            seed: 0,
        }
    }
}

fn default_samples() -> usize {
    10_000
}
fn default_tol() -> f64 {
    DEFAULT_TOL
}
fn smooth_tol() -> f64 {
    SMOOTH_TOL
}
fn fd_tol() -> f64 {
    FD_TOL
}
fn fd_step() -> f64 {
    1e-6
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) => return usage(format!("cannot read {}: {e}", path.display())),
        };
        if text.trim().is_empty() {
            return usage(format!("{} is empty", path.display()));
        }
        let is_json = path.extension().is_some_and(|e| e == "json") || text.trim_start().starts_with('{');
        let cfg: ExperimentConfig = if is_json {
            match serde_json::from_str(&text) {
                Ok(c) => c,
                Err(e) => return usage(format!("invalid JSON config {}: {e}", path.display())),
            }
        } else {
            match toml::from_str(&text) {
                Ok(c) => c,
                Err(e) => return usage(format!("invalid TOML config {}: {e}", path.display())),
            }
        };
        if cfg.is_empty() {
            return usage(format!("{} defines no experiment", path.display()));
        }
        Ok(cfg)
    }

    fn is_empty(&self) -> bool {
        let bare = ExperimentConfig { seeds: vec![], out: None, workers: None, ..self.clone() };
        bare == ExperimentConfig::default()
    }

    /// First 16 hex digits of SHA-256 over the canonical JSON form, with seeds,
    /// output directory and worker count left out.
    pub fn hash(&self) -> String {
        let bare = ExperimentConfig { seeds: vec![], out: None, workers: None, ..self.clone() };
        let bytes = serde_json::to_vec(&bare).expect("config serializes");
        Sha256::digest(&bytes).iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    pub fn require_seeds(&self) -> anyhow::Result<&[u64]> {
        if self.seeds.is_empty() {
            return usage("no seeds: set `seeds` in the config or pass --seeds");
        }
        Ok(&self.seeds)
    }

    pub fn require_horizons(&self) -> anyhow::Result<&[u64]> {
        if self.horizons.is_empty() {
            return usage("no horizons: set `horizons` in the config");
        }
        if self.horizons[0] == 0 || self.horizons.windows(2).any(|w| w[0] >= w[1]) {
            return usage(format!("horizons must be positive and strictly increasing, got {:?}", self.horizons));
        }
        Ok(&self.horizons)
    }

    pub fn require_family(&self) -> anyhow::Result<&FamilySpec> {
        match &self.family {
            Some(f) => Ok(f),
            None => usage("this command needs a [family] section"),
        }
    }
}

/// Parses `--seeds`: comma-separated items, each `n` or a half-open range `a..b`.
pub fn parse_seeds(s: &str) -> Result<Vec<u64>, String> {
    let mut out = Vec::new();
    for item in s.split(',').map(str::trim).filter(|i| !i.is_empty()) {
        if let Some((a, b)) = item.split_once("..") {
            let a: u64 = a.trim().parse().map_err(|e| format!("bad seed range {item:?}: {e}"))?;
            let b: u64 = b.trim().parse().map_err(|e| format!("bad seed range {item:?}: {e}"))?;
            if a >= b {
                return Err(format!("empty seed range {item:?}"));
            }
            out.extend(a..b);
        } else {
            out.push(item.parse().map_err(|e| format!("bad seed {item:?}: {e}"))?);
        }
    }
    if out.is_empty() {
        return Err("no seeds given".into());
    }
    Ok(out)
}
