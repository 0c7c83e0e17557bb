//! Information-theoretic accounting: Gaussian KL, divergence-decomposition
//! budgets, Pinsker aggregation, explicit lower-bound evaluators and the
//! identification game.
//!
//! The minimax bounds quantify over every algorithm; the game here only
//! illustrates them for the algorithms it is given.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algorithms::{run_sgd, SgdSchedule};
use crate::functions::{d_threshold, FamilyKind, HardFamily, Objective};
use crate::oracle::{GaussianOracle, OracleConfig, QueryLog};
use crate::{linalg, seeding};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LowerBoundError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("precondition violated: {0}")]
    Threshold(String),
}

/// `(d0/(2σ²))‖mean_a − mean_b‖²`: KL between `N(mean, (σ²/d0) I)` laws.
pub fn kl_gaussian(mean_a: &[f64], mean_b: &[f64], sigma: f64, d0: usize) -> Result<f64, LowerBoundError> {
    if !(sigma > 0.0) {
        return Err(LowerBoundError::Domain(format!("sigma must be positive, got {sigma}")));
    }
    if mean_a.len() != mean_b.len() {
        return Err(LowerBoundError::Domain("mean vectors differ in length".into()));
    }
    let d = linalg::dist(mean_a, mean_b);
    Ok(d0 as f64 / (2.0 * sigma * sigma) * d * d)
}

/// Monte-Carlo estimate of the same KL: average log-density ratio under `mean_a`.
pub fn kl_gaussian_mc(mean_a: &[f64], mean_b: &[f64], sigma: f64, samples: usize, seed: u64) -> f64 {
    let d0 = mean_a.len();
    let s = sigma / (d0 as f64).sqrt();
    let mut rng = seeding::stream(seed, 0x4b4c);
    let mut acc = 0.0;
    for _ in 0..samples {
        let mut lr = 0.0;
        for j in 0..d0 {
            let e = s * seeding::standard_normal(&mut rng);
            let diff = mean_a[j] - mean_b[j];
            // log N(x; a) − log N(x; b) with x = a + e
            lr += ((e + diff).powi(2) - e * e) / (2.0 * s * s);
        }
        acc += lr;
    }
    acc / samples as f64
}

/// Analytic sups of `‖∇F_i − ∇G‖` inside and outside the region of instance `i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapBounds {
    pub inside: f64,
    pub outside: f64,
}

pub fn gap_bounds(family: &HardFamily) -> GapBounds {
    let p = &family.params;
    match p.family_kind {
        FamilyKind::Qcqg => GapBounds { inside: 169.0 * p.mu * p.delta, outside: 169.0 * p.mu * p.tau * p.delta },
        FamilyKind::Rsi => GapBounds { inside: p.l * p.delta, outside: 5.0 * p.mu * p.delta },
        FamilyKind::Qc => GapBounds { inside: p.l * p.delta, outside: p.l * p.tau * p.delta },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KlEntry {
    pub i: usize,
    pub expected_n: f64,
    pub inside_sup: f64,
    pub outside_sup: f64,
    pub kl_upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KlBudget {
    pub per_instance: Vec<KlEntry>,
    pub average: f64,
    pub horizon: u64,
    pub trials: usize,
}

/// Chain-rule bound from (expected) region counts `E[N_i]` over a horizon `T`.
pub fn divergence_budget_from_counts(expected_n: &[f64], horizon: u64, trials: usize, family: &HardFamily) -> KlBudget {
    let b = gap_bounds(family);
    let p = &family.params;
    let c = p.d0 as f64 / (2.0 * p.sigma * p.sigma);
    let t = horizon as f64;
    let per_instance: Vec<KlEntry> = expected_n
        .iter()
        .enumerate()
        .map(|(i, &n)| KlEntry {
            i,
            expected_n: n,
            inside_sup: b.inside,
            outside_sup: b.outside,
            kl_upper: c * (n * b.inside * b.inside + (t - n) * b.outside * b.outside),
        })
        .collect();
    let average = per_instance.iter().map(|e| e.kl_upper).sum::<f64>() / per_instance.len() as f64;
    KlBudget { per_instance, average, horizon, trials }
}

/// Chain-rule bound for a single query log, using its total as the horizon.
pub fn divergence_budget(log: &QueryLog, family: &HardFamily) -> KlBudget {
    let counts: Vec<f64> = (0..family.m()).map(|i| log.count(i) as f64).collect();
    divergence_budget_from_counts(&counts, log.total, 1, family)
}

/// Averages region counts over several logs of the same horizon.
pub fn divergence_budget_mean(logs: &[QueryLog], family: &HardFamily) -> KlBudget {
    let horizon = logs.first().map(|l| l.total).unwrap_or(0);
    let mut counts = vec![0.0; family.m()];
    for log in logs {
        for (i, c) in counts.iter_mut().enumerate() {
            *c += log.count(i) as f64;
        }
    }
    counts.iter_mut().for_each(|c| *c /= logs.len() as f64);
    divergence_budget_from_counts(&counts, horizon, logs.len(), family)
}

/// Closed form of the average budget when `Σ_i N_i ≤ T`.
pub fn kl_average_closed_form(family: &HardFamily, horizon: u64) -> f64 {
    let p = &family.params;
    let (d0, m, t) = (p.d0 as f64, family.m() as f64, horizon as f64);
    let s2 = 2.0 * p.sigma * p.sigma;
    match p.family_kind {
        FamilyKind::Qcqg => 169.0f64.powi(2) * d0 * (p.mu * p.delta).powi(2) / s2 * (p.tau * p.tau + 1.0 / m) * t,
        FamilyKind::Rsi => d0 * (p.mu * p.delta).powi(2) / s2 * (p.kappa().powi(2) / m + 25.0) * t,
        FamilyKind::Qc => d0 * (p.l * p.delta).powi(2) / s2 * (1.0 / m + p.tau * p.tau) * t,
    }
}

/// `max(0, 1 − 1/m − √avg_kl)`.
pub fn pinsker_misid_lower(avg_kl: f64, m: usize) -> f64 {
    assert!(avg_kl >= 0.0 && m >= 2, "need avg_kl >= 0 and m >= 2");
    (1.0 - 1.0 / m as f64 - avg_kl.sqrt()).max(0.0)
}

/// Per-unit-misidentification gap floor: `(169/2)μΔ²`, `(L/2)Δ²` or `(7/32)LDΔ`.
pub fn gap_floor(family: &HardFamily) -> f64 {
    let p = &family.params;
    match p.family_kind {
        FamilyKind::Qcqg => 169.0 / 2.0 * p.mu * p.delta * p.delta,
        FamilyKind::Rsi => p.l / 2.0 * p.delta * p.delta,
        FamilyKind::Qc => 7.0 / 32.0 * p.l * p.d_cap.unwrap_or(0.0) * p.delta,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundParams {
    pub kind: FamilyKind,
    pub mu: f64,
    pub tau: f64,
    pub l: f64,
    pub sigma: f64,
    /// Domain radius `D` (QC only).
    pub d_cap: f64,
    pub horizon: u64,
    /// Ambient dimension, checked against the family's threshold.
    pub d: usize,
    /// Constant `C` in the QC budget condition `T ≥ C σ²/(L²D² log_{16/15}(2/τ))`.
    pub qc_t_constant: f64,
}

pub const QC_T_CONSTANT: f64 = 35.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LowerBound {
    pub delta_star: f64,
    /// Explicit pre-asymptotic expression evaluated at `Δ*` (the statement's
    /// universal constant `c` is not used).
    pub bound: f64,
}

fn log_b(b: f64, x: f64) -> f64 {
    x.ln() / b.ln()
}

/// Optimizing `Δ*` and the explicit lower-bound value.
pub fn theoretical_bound(p: &BoundParams) -> Result<LowerBound, LowerBoundError> {
    let thr = |m: String| Err(LowerBoundError::Threshold(m));
    if !(p.mu > 0.0 && p.sigma > 0.0 && p.l > 0.0 && p.horizon > 0) {
        return Err(LowerBoundError::Domain(format!("need positive mu, L, sigma, T: {p:?}")));
    }
    if !(p.tau > 0.0 && p.tau <= 1.0) {
        return Err(LowerBoundError::Domain(format!("tau must lie in (0, 1], got {}", p.tau)));
    }
    let kappa = p.l / p.mu;
    let d_min = d_threshold(p.kind, p.tau, kappa);
    if (p.d as f64) < d_min {
        return thr(format!("dimension d = {} is below the threshold {d_min:.3}", p.d));
    }
    let t = p.horizon as f64;
    let (mu, tau, l, s) = (p.mu, p.tau, p.l, p.sigma);
    match p.kind {
        FamilyKind::Qcqg => {
            if kappa < 202.0 * (1.0 - 1e-12) {
                return thr(format!("L/mu = {kappa} is below 202"));
            }
            let lg = log_b(1.25, 5.0 / (tau * tau));
            let ds = 1.0 / (4.0 * 10711f64.sqrt() * mu * tau) / (lg / (s * s) * t).sqrt();
            let root = (10711.0 * lg / (s * s) * mu * mu * tau * tau * ds * ds * t).sqrt();
            Ok(LowerBound { delta_star: ds, bound: 169.0 / 2.0 * mu * ds * ds * (0.5 - root) })
        }
        FamilyKind::Rsi => {
            let lg = log_b(1.25, 5.0 * kappa * kappa);
            let ds = 1.0 / (4.0 * mu) * (s * s / (26.0 * lg * t)).sqrt();
            let root = (26.0 * lg / (s * s) * mu * mu * ds * ds * t).sqrt();
            Ok(LowerBound { delta_star: ds, bound: l / 2.0 * ds * ds * (0.5 - root) })
        }
        FamilyKind::Qc => {
            if !(p.d_cap > 0.0) {
                return Err(LowerBoundError::Domain("QC needs D > 0".into()));
            }
            let t_min = p.qc_t_constant * s * s / (l * l * p.d_cap * p.d_cap * log_b(16.0 / 15.0, 2.0 / tau));
            if t < t_min {
                return thr(format!("T = {} is below {t_min:.3}", p.horizon));
            }
            let lg = log_b(16.0 / 15.0, 5.0 / (tau * tau));
            let ds = 2.0 * s / (4.0 * 3f64.sqrt() * l * tau * (8.0 * lg * t).sqrt());
            if ds > p.d_cap / 16.0 {
                return thr(format!("Delta* = {ds} exceeds D/16 = {}", p.d_cap / 16.0));
            }
            let root = (3.0 * lg / (4.0 * s * s) * l * l * tau * tau * ds * ds * t).sqrt();
            Ok(LowerBound { delta_star: ds, bound: 7.0 / 32.0 * l * p.d_cap * ds * (0.5 - root) })
        }
    }
}

/// What a player sees in one trial. `instance_index` is exposed only so test
/// doubles can cheat; honest algorithms must ignore it.
pub struct GameTrial<'a> {
    pub family: &'a HardFamily,
    pub instance_index: usize,
    pub horizon: u64,
    pub seed: u64,
}

/// An algorithm playing the identification game through the oracle.
pub trait GameAlgorithm: Sync {
    fn name(&self) -> String;
    fn play(&self, trial: &GameTrial<'_>, oracle: &mut GaussianOracle<'_>) -> Result<Vec<f64>, String>;
}

/// Outputs the true minimizer without querying.
pub struct Clairvoyant;

impl GameAlgorithm for Clairvoyant {
    fn name(&self) -> String {
        "clairvoyant".into()
    }
    fn play(&self, trial: &GameTrial<'_>, _oracle: &mut GaussianOracle<'_>) -> Result<Vec<f64>, String> {
        let z = &trial.family.params.centers[trial.instance_index];
        Ok(linalg::pad(z, trial.family.params.d))
    }
}

/// Outputs the origin without querying.
pub struct Blind;

impl GameAlgorithm for Blind {
    fn name(&self) -> String {
        "blind".into()
    }
    fn play(&self, trial: &GameTrial<'_>, _oracle: &mut GaussianOracle<'_>) -> Result<Vec<f64>, String> {
        Ok(vec![0.0; trial.family.params.d])
    }
}

/// SGD from `x1` (origin if empty) with the given schedule.
pub struct SgdPlayer {
    pub schedule: SgdSchedule,
    pub x1: Vec<f64>,
}

impl GameAlgorithm for SgdPlayer {
    fn name(&self) -> String {
        "sgd".into()
    }
    fn play(&self, trial: &GameTrial<'_>, oracle: &mut GaussianOracle<'_>) -> Result<Vec<f64>, String> {
        let d = trial.family.params.d;
        let x1 = if self.x1.is_empty() { vec![0.0; d] } else { linalg::pad(&self.x1, d) };
        let out_seed = seeding::derive_seed(trial.seed, 0x6f7574);
        run_sgd(oracle, &x1, trial.horizon, &self.schedule, out_seed)
            .map(|r| r.x_hat)
            .map_err(|e| e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    pub i: usize,
    pub x_hat: Vec<f64>,
    pub gap: f64,
    pub identified: bool,
    pub queries: u64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameResult {
    pub algorithm: String,
    pub trials: usize,
    pub failed: usize,
    pub avg_gap: f64,
    /// Standard error of `avg_gap`.
    pub gap_stderr: f64,
    pub misid_rate: f64,
    pub per_trial: Vec<TrialRecord>,
    /// Region counts averaged over trials, per instance.
    pub mean_region_counts: Vec<f64>,
}

/// Plays `trials` rounds: draw `i` uniformly, run the algorithm for `T` queries on
/// `F_i`, score `F_i(x̂)` and whether `x̂_A ∈ B(z_i, region_radius)`.
pub fn identification_game(
    algorithm: &dyn GameAlgorithm,
    family: &HardFamily,
    horizon: u64,
    trials: usize,
    seed: u64,
) -> GameResult {
    let p = &family.params;
    let per_trial: Vec<(TrialRecord, Vec<u64>)> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let tseed = seeding::derive_seed(seed, trial as u64);
            let mut pick = seeding::stream(tseed, 0x7069_636b);
            let i = rand::Rng::random_range(&mut pick, 0..family.m());
            let f = family.instance(i);
            let cfg = OracleConfig::new(p.sigma, p.d0, tseed).with_budget(horizon);
            let log = QueryLog::new(false).with_regions(family.regions());
            let mut oracle = GaussianOracle::new(cfg, f).expect("valid oracle config").with_log(log);
            let ctx = GameTrial { family, instance_index: i, horizon, seed: tseed };
            let outcome = algorithm.play(&ctx, &mut oracle);
            let counts: Vec<u64> = (0..family.m()).map(|j| oracle.log().count(j)).collect();
            let rec = match outcome {
                Ok(x) => {
                    let gap = f.value(&x) - f.f_star();
                    let identified = linalg::dist(&x[..p.d0], &p.centers[i]) < p.region_radius();
                    TrialRecord { trial, seed: tseed, i, x_hat: x, gap, identified, queries: oracle.used(), error: None }
                }
                Err(e) => TrialRecord {
                    trial,
                    seed: tseed,
                    i,
                    x_hat: vec![],
                    gap: f64::NAN,
                    identified: false,
                    queries: oracle.used(),
                    error: Some(e),
                },
            };
            (rec, counts)
        })
        .collect();

    let ok: Vec<&TrialRecord> = per_trial.iter().map(|(r, _)| r).filter(|r| r.error.is_none()).collect();
    let n_ok = ok.len().max(1) as f64;
    let avg_gap = ok.iter().map(|r| r.gap).sum::<f64>() / n_ok;
    let var = ok.iter().map(|r| (r.gap - avg_gap).powi(2)).sum::<f64>() / (n_ok - 1.0).max(1.0);
    let misid_rate = ok.iter().filter(|r| !r.identified).count() as f64 / n_ok;
    let mut mean_region_counts = vec![0.0; family.m()];
    for (_, c) in &per_trial {
        for (acc, v) in mean_region_counts.iter_mut().zip(c) {
            *acc += *v as f64;
        }
    }
    mean_region_counts.iter_mut().for_each(|c| *c /= trials.max(1) as f64);
    GameResult {
        algorithm: algorithm.name(),
        trials,
        failed: trials - ok.len(),
        avg_gap,
        gap_stderr: (var / n_ok).sqrt(),
        misid_rate,
        per_trial: per_trial.into_iter().map(|(r, _)| r).collect(),
        mean_region_counts,
    }
}

/// Sampled sup of `‖∇F_i − ∇G‖` over points inside and outside region `i`.
pub fn sampled_gap_sups(family: &HardFamily, i: usize, points: &[Vec<f64>]) -> (f64, f64) {
    let f = family.instance(i);
    let g = family.reference();
    let (c, r) = (&family.params.centers[i], family.params.region_radius());
    let d0 = family.params.d0;
    let mut sup = (0.0f64, 0.0f64);
    for x in points {
        let gap = linalg::dist(&f.gradient(x), &g.gradient(x));
        if linalg::dist(&x[..d0], c) < r {
            sup.0 = sup.0.max(gap);
        } else {
            sup.1 = sup.1.max(gap);
        }
    }
    sup
}
