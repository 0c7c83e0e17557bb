//! Stochastic first-order oracles with budget accounting.
//!
//! A query at `x` returns `∇F(x) + (ξ, 0)` with `ξ ~ N(0, σ²/d0 · I_{d0})`, so the
//! noise has total variance `σ²` and lives on the first `d0` coordinates only.

use std::collections::BTreeMap;
use std::io::Write;

use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::functions::{FunctionError, Objective};
use crate::{linalg, seeding};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("query budget of {0} exhausted")]
    BudgetExhausted(u64),
    #[error(transparent)]
    Function(#[from] FunctionError),
    #[error("oracle misconfigured: {0}")]
    Config(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    pub sigma: f64,
    pub d0: usize,
    pub seed: u64,
    /// Stream index, usually the trial number.
    #[serde(default)]
    pub stream: u64,
    /// `None` means unlimited.
    pub budget: Option<u64>,
}

impl OracleConfig {
    pub fn new(sigma: f64, d0: usize, seed: u64) -> Self {
        OracleConfig { sigma, d0, seed, stream: 0, budget: None }
    }

    pub fn with_budget(mut self, budget: u64) -> Self {
        self.budget = Some(budget);
        self
    }

    pub fn with_stream(mut self, stream: u64) -> Self {
        self.stream = stream;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryEntry {
    pub t: u64,
    pub x: Vec<f64>,
    pub g: Vec<f64>,
    pub region: Option<usize>,
}

/// Ordered record of queries and per-region visit counts `N_i`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct QueryLog {
    pub entries: Vec<QueryEntry>,
    pub region_counts: BTreeMap<usize, u64>,
    pub total: u64,
    /// Registered regions `(center, radius)` over the first `center.len()` coordinates.
    #[serde(skip)]
    regions: Vec<(Vec<f64>, f64)>,
    #[serde(skip)]
    keep_entries: bool,
}

impl QueryLog {
    pub fn new(keep_entries: bool) -> Self {
        QueryLog { keep_entries, ..Default::default() }
    }

    pub fn with_regions(mut self, regions: Vec<(Vec<f64>, f64)>) -> Self {
        self.regions = regions;
        self
    }

    pub fn region_of(&self, x: &[f64]) -> Option<usize> {
        self.regions
            .iter()
            .position(|(c, r)| linalg::dist(&x[..c.len()], c) < *r)
    }

    pub fn record(&mut self, x: &[f64], g: &[f64]) {
        self.total += 1;
        let region = self.region_of(x);
        if let Some(i) = region {
            *self.region_counts.entry(i).or_insert(0) += 1;
        }
        if self.keep_entries {
            self.entries.push(QueryEntry { t: self.total, x: x.to_vec(), g: g.to_vec(), region });
        }
    }

    pub fn count(&self, region: usize) -> u64 {
        self.region_counts.get(&region).copied().unwrap_or(0)
    }

    /// Writes `t,x,g,region_id` rows; vectors are `;`-joined, an empty region id means none.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t,x,g,region_id")?;
        for e in &self.entries {
            let join = |v: &[f64]| v.iter().map(|c| format!("{c:e}")).collect::<Vec<_>>().join(";");
            let region = e.region.map(|i| i.to_string()).unwrap_or_default();
            writeln!(w, "{},{},{},{}", e.t, join(&e.x), join(&e.g), region)?;
        }
        Ok(())
    }
}

/// Gaussian oracle bound to one objective. Not shared across threads.
pub struct GaussianOracle<'a> {
    config: OracleConfig,
    instance: &'a dyn Objective,
    rng: ChaCha20Rng,
    used: u64,
    log: QueryLog,
}

impl<'a> GaussianOracle<'a> {
    pub fn new(config: OracleConfig, instance: &'a dyn Objective) -> Result<Self, OracleError> {
        if !(config.sigma >= 0.0) || !config.sigma.is_finite() {
            return Err(OracleError::Config(format!("sigma must be >= 0, got {}", config.sigma)));
        }
        if config.d0 == 0 || config.d0 > instance.dim() {
            return Err(OracleError::Config(format!(
                "noise support d0 = {} must lie in 1..={}",
                config.d0,
                instance.dim()
            )));
        }
        let rng = seeding::stream(config.seed, config.stream);
        Ok(GaussianOracle { config, instance, rng, used: 0, log: QueryLog::new(false) })
    }

    /// Replaces the query log (e.g. to register regions or keep entries).
    pub fn with_log(mut self, log: QueryLog) -> Self {
        self.log = log;
        self
    }

    pub fn instance(&self) -> &'a dyn Objective {
        self.instance
    }

    pub fn config(&self) -> &OracleConfig {
        &self.config
    }

    pub fn used(&self) -> u64 {
        self.used
    }

    pub fn remaining(&self) -> Option<u64> {
        self.config.budget.map(|b| b - self.used)
    }

    pub fn log(&self) -> &QueryLog {
        &self.log
    }

    pub fn into_log(self) -> QueryLog {
        self.log
    }

    pub fn query(&mut self, x: &[f64]) -> Result<Vec<f64>, OracleError> {
        if let Some(b) = self.config.budget {
            if self.used >= b {
                return Err(OracleError::BudgetExhausted(b));
            }
        }
        self.instance.check_domain(x)?;
        let mut g = self.instance.gradient(x);
        let s = self.config.sigma / (self.config.d0 as f64).sqrt();
        for gi in g.iter_mut().take(self.config.d0) {
            *gi += s * seeding::standard_normal(&mut self.rng);
        }
        self.used += 1;
        self.log.record(x, &g);
        Ok(g)
    }

    /// Scalar query for 1-D instances; the noise is `N(0, σ²)`.
    pub fn query_1d(&mut self, x: f64) -> Result<f64, OracleError> {
        if self.instance.dim() != 1 {
            return Err(OracleError::Config(format!(
                "query_1d needs a 1-D instance, got dimension {}",
                self.instance.dim()
            )));
        }
        Ok(self.query(&[x])?[0])
    }
}
