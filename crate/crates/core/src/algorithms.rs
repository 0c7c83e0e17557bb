//! Upper-bound algorithms: SGD with decaying steps and weighted output
//! sampling, and the 1-D dichotomic search for RSI functions.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::functions::Objective;
use crate::oracle::{GaussianOracle, OracleError};
use crate::{linalg, seeding};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AlgorithmError {
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("non-finite iterate at step {t}: {x:?}")]
    NonFinite { t: u64, x: Vec<f64> },
    #[error("query budget exhausted after {partial:?}")]
    Aborted { partial: Box<BisectReport> },
}

/// Step-size schedule for SGD.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SgdSchedule {
    /// `η_t = 2 / (μ(t + 2L²/μ² + 1))`
    Rsi { mu: f64, l: f64 },
    /// `η_t = 4 / (τμ(t + 16L/(τ²μ)))`
    Qcqg { mu: f64, tau: f64, l: f64 },
    /// `η_t = c / (t + offset)`
    Custom { c: f64, offset: f64 },
}

impl SgdSchedule {
    pub fn eta(&self, t: u64) -> f64 {
        let t = t as f64;
        match *self {
            SgdSchedule::Rsi { mu, l } => 2.0 / (mu * (t + 2.0 * l * l / (mu * mu) + 1.0)),
            SgdSchedule::Qcqg { mu, tau, l } => 4.0 / (tau * mu * (t + 16.0 * l / (tau * tau * mu))),
            SgdSchedule::Custom { c, offset } => c / (t + offset),
        }
    }

    /// Output weight `w_t = 2t / (T(T+1))`.
    pub fn weight(t: u64, horizon: u64) -> f64 {
        2.0 * t as f64 / (horizon as f64 * (horizon as f64 + 1.0))
    }

    fn validate(&self) -> Result<(), AlgorithmError> {
        let ok = match *self {
            SgdSchedule::Rsi { mu, l } => mu > 0.0 && l >= mu,
            SgdSchedule::Qcqg { mu, tau, l } => mu > 0.0 && l > 0.0 && tau > 0.0 && tau <= 1.0,
            SgdSchedule::Custom { c, offset } => c > 0.0 && offset > -1.0,
        };
        if ok {
            Ok(())
        } else {
            Err(AlgorithmError::Config(format!("invalid schedule {self:?}")))
        }
    }
}

/// Draws `t ∈ {1..T}` with probability `2t / (T(T+1))` by inverting the CDF `t(t+1)/(T(T+1))`.
pub fn sample_weighted_index<R: Rng + ?Sized>(rng: &mut R, horizon: u64) -> u64 {
    let u: f64 = rng.random();
    let n = horizon as f64;
    let target = u * n * (n + 1.0);
    let mut t = ((-1.0 + (1.0 + 4.0 * target).sqrt()) / 2.0).ceil() as u64;
    t = t.clamp(1, horizon);
    while t > 1 && ((t - 1) * t) as f64 >= target {
        t -= 1;
    }
    while ((t * (t + 1)) as f64) < target && t < horizon {
        t += 1;
    }
    t
}

/// Deterministic part of the RSI branch bound, times `‖x₁ − x₁*‖²`.
pub fn sgd_rsi_bound(mu: f64, l: f64, sigma: f64, horizon: u64, dist0_sq: f64) -> f64 {
    let t = horizon as f64;
    (mu * mu * l.powi(3) + l.powi(5)) / (2.0 * mu.powi(4) * t * (t + 1.0)) * dist0_sq
        + 2.0 * l * sigma * sigma / (mu * mu * (t + 1.0))
}

/// QC∩QG branch bound with `a = 16L/(τ²μ)`.
pub fn sgd_qcqg_bound(mu: f64, tau: f64, l: f64, sigma: f64, horizon: u64, dist0_sq: f64) -> f64 {
    let t = horizon as f64;
    let a = 16.0 * l / (tau * tau * mu);
    mu * (1.0 + a).powi(2) / (2.0 * t * (t + 1.0)) * dist0_sq + 16.0 * sigma * sigma / (tau * tau * mu * (t + 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SgdReport {
    pub x_hat: Vec<f64>,
    /// Index of the sampled output in `1..=T`.
    pub t_hat: u64,
    pub output_seed: u64,
    pub oracle_seed: u64,
    pub oracle_stream: u64,
    /// `f(x̂) − f*`.
    pub gap: f64,
    /// `Σ_t w_t (f(x_t) − f*)`, the expectation of `gap` over the output draw.
    pub weighted_gap: f64,
    /// Gap of the last iterate `x_{T+1}`.
    pub final_gap: f64,
    pub queries: u64,
    /// `(t, f(x_t) − f*)` at powers of two and at `T`.
    pub checkpoints: Vec<(u64, f64)>,
}

/// Runs `x_{t+1} = x_t − η_t g_t` for `t = 1..T` and returns `x̂` drawn with weights `w_t`.
pub fn run_sgd(
    oracle: &mut GaussianOracle<'_>,
    x1: &[f64],
    horizon: u64,
    schedule: &SgdSchedule,
    output_seed: u64,
) -> Result<SgdReport, AlgorithmError> {
    if horizon == 0 {
        return Err(AlgorithmError::Config("T must be at least 1".into()));
    }
    schedule.validate()?;
    let f = oracle.instance();
    if x1.len() != f.dim() {
        return Err(AlgorithmError::Config(format!(
            "x1 has dimension {}, instance has {}",
            x1.len(),
            f.dim()
        )));
    }
    let mut rng = seeding::stream(output_seed, 0x5347_4400);
    let t_hat = sample_weighted_index(&mut rng, horizon);
    let f_star = f.f_star();
    let mut x = x1.to_vec();
    let mut x_hat = Vec::new();
    let mut weighted_gap = 0.0;
    let mut checkpoints = Vec::new();
    for t in 1..=horizon {
        let gap_t = f.value(&x) - f_star;
        weighted_gap += SgdSchedule::weight(t, horizon) * gap_t;
        if t.is_power_of_two() || t == horizon {
            checkpoints.push((t, gap_t));
        }
        if t == t_hat {
            x_hat = x.clone();
        }
        let g = oracle.query(&x)?;
        linalg::axpy(-schedule.eta(t), &g, &mut x);
        if !linalg::is_finite(&x) {
            return Err(AlgorithmError::NonFinite { t, x });
        }
    }
    let cfg = oracle.config();
    Ok(SgdReport {
        gap: f.value(&x_hat) - f_star,
        x_hat,
        t_hat,
        output_seed,
        oracle_seed: cfg.seed,
        oracle_stream: cfg.stream,
        weighted_gap,
        final_gap: f.value(&x) - f_star,
        queries: horizon,
        checkpoints,
    })
}

/// Inputs of the dichotomic search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BisectParams {
    /// Query budget `T`.
    pub budget: u64,
    /// Initial bracket width `D`; the search starts on `[−D/2, D/2]`.
    pub d_cap: f64,
    pub mu: f64,
    pub l: f64,
    /// Noise level assumed by the algorithm.
    pub sigma: f64,
    /// Failure probability.
    pub delta: f64,
}

fn log43(x: f64) -> f64 {
    x.ln() / (4.0f64 / 3.0).ln()
}

impl BisectParams {
    pub fn kappa(&self) -> f64 {
        self.l / self.mu
    }

    /// `4⌈κ/4⌉`.
    pub fn kappa_eff(&self) -> usize {
        let k = (self.kappa() / 4.0 * (1.0 - 1e-12)).ceil().max(1.0);
        4 * k as usize
    }

    /// `log_{4/3}(LμD²T/(192σ²))`.
    pub fn log_term(&self) -> f64 {
        log43(self.l * self.mu * self.d_cap.powi(2) * self.budget as f64 / (192.0 * self.sigma.powi(2)))
    }

    /// `n = ⌈log_{4/3}(LμD²T/(192σ²))⌉`.
    pub fn n(&self) -> i64 {
        self.log_term().ceil() as i64
    }

    /// `Δ = (8/μ)σ√(2n log(2n(κ+1)/δ)/T)` with `κ` replaced by `κ_eff`.
    pub fn grid_delta(&self) -> f64 {
        let n = self.n() as f64;
        let k1 = self.kappa_eff() as f64 + 1.0;
        8.0 / self.mu * self.sigma * (2.0 * n * (2.0 * n * k1 / self.delta).ln() / self.budget as f64).sqrt()
    }

    /// `⌊T/(n(κ_eff+1))⌋`.
    pub fn per_point(&self) -> u64 {
        let n = self.n().max(1) as u64;
        self.budget / (n * (self.kappa_eff() as u64 + 1))
    }

    /// Right-hand side `2(κ+1) log_{4/3}(Lμ²D²T/(192σ²))` of the budget threshold.
    pub fn threshold_rhs(&self) -> f64 {
        2.0 * (self.kappa() + 1.0)
            * log43(self.l * self.mu.powi(2) * self.d_cap.powi(2) * self.budget as f64 / (192.0 * self.sigma.powi(2)))
    }

    /// `128σ²/(μT) · log_{4/3}(LμD²T/(192σ²)) · log(κ log_{4/3}(…)/δ)`.
    pub fn theorem_bound(&self) -> f64 {
        let lt = self.log_term();
        128.0 * self.sigma.powi(2) / (self.mu * self.budget as f64) * lt * (self.kappa() * lt / self.delta).ln()
    }

    pub fn validate(&self) -> Result<(), AlgorithmError> {
        let bad = |m: String| Err(AlgorithmError::Config(m));
        if !(self.mu > 0.0 && self.l >= self.mu && self.d_cap > 0.0 && self.sigma > 0.0) {
            return bad(format!("need mu > 0, L >= mu, D > 0, sigma > 0: {self:?}"));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return bad(format!("delta must lie in (0, 1), got {}", self.delta));
        }
        if (self.budget as f64) < self.threshold_rhs() {
            return bad(format!(
                "T = {} is below the threshold 2(κ+1)log_{{4/3}}(Lμ²D²T/(192σ²)) = {:.3}",
                self.budget,
                self.threshold_rhs()
            ));
        }
        if self.n() < 1 {
            return bad(format!("iteration count n = {} is not positive", self.n()));
        }
        if self.per_point() == 0 {
            return bad(format!(
                "T = {} leaves no queries per grid point (n = {}, κ_eff = {})",
                self.budget,
                self.n(),
                self.kappa_eff()
            ));
        }
        Ok(())
    }

    /// Smallest budget `T` from which the threshold holds for all larger budgets
    /// and every grid point gets at least one query.
    pub fn min_budget(&self) -> u64 {
        let mut p = *self;
        // Upper fixed point of T = 2(κ+1) log_{4/3}(cT).
        let mut t = 1e6f64;
        for _ in 0..200 {
            p.budget = t.ceil() as u64;
            t = p.threshold_rhs().max(1.0);
        }
        let mut budget = (t.ceil() as u64).max(1);
        loop {
            p.budget = budget;
            if p.validate().is_ok() {
                return budget;
            }
            budget += 1;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    Stop,
    SideUpper,
    SideLower,
    ShrinkUpper,
    ShrinkLower,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BisectStep {
    pub k: i64,
    pub a: f64,
    pub b_l: f64,
    pub b_u: f64,
    pub gamma: f64,
    pub z: usize,
    pub g_z: f64,
    pub branch: Branch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BisectReport {
    pub a: f64,
    pub gap: f64,
    pub queries: u64,
    pub iterations: usize,
    pub stopped_early: bool,
    pub n: i64,
    pub grid_delta: f64,
    pub kappa_eff: usize,
    pub per_point: u64,
    pub b_l: f64,
    pub b_u: f64,
    pub theorem_bound: f64,
    pub trace: Vec<BisectStep>,
}

/// Index set `P_i` (1-based, inclusive) for grid size `K + 1`.
pub fn index_set(i: usize, kappa_eff: usize) -> (usize, usize) {
    let q = kappa_eff / 4;
    let (lo, hi) = if i + 1 <= q {
        (i, i + q)
    } else if i <= kappa_eff / 2 {
        (i, 3 * q)
    } else if i <= 3 * q {
        (q, i)
    } else {
        (i - q, i)
    };
    (lo.clamp(1, kappa_eff + 1), hi.clamp(1, kappa_eff + 1))
}

/// Aggregates `g_i`, `i = 1..=K+1`, from per-point means (index 0 unused).
pub fn aggregates(point_means: &[f64], kappa_eff: usize) -> Vec<f64> {
    let mut g = vec![f64::NAN; kappa_eff + 2];
    for (i, gi) in g.iter_mut().enumerate().skip(1) {
        let (lo, hi) = index_set(i, kappa_eff);
        *gi = point_means[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64;
    }
    g
}

/// Decision rule of one iteration given the aggregates.
pub fn decide(g: &[f64], kappa_eff: usize, threshold: f64) -> (usize, Branch) {
    let q = kappa_eff / 4;
    let mut z = q;
    for i in q..=3 * q {
        if g[i].abs() > g[z].abs() {
            z = i;
        }
    }
    let g_z = g[z];
    if g_z.abs() <= threshold {
        let left_hi = (q.saturating_sub(1)).max(1);
        let max_left = g[1..=left_hi].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min_right = g[3 * q + 1..=kappa_eff + 1].iter().copied().fold(f64::INFINITY, f64::min);
        if max_left < threshold && min_right >= -threshold {
            (z, Branch::Stop)
        } else if max_left >= threshold {
            (z, Branch::SideUpper)
        } else {
            (z, Branch::SideLower)
        }
    } else if g_z >= 0.0 {
        (z, Branch::ShrinkUpper)
    } else {
        (z, Branch::ShrinkLower)
    }
}

/// Dichotomic search for 1-D RSI functions.
pub fn run_bisect1d(oracle: &mut GaussianOracle<'_>, params: &BisectParams) -> Result<BisectReport, AlgorithmError> {
    params.validate()?;
    let f = oracle.instance();
    if f.dim() != 1 {
        return Err(AlgorithmError::Config(format!("instance has dimension {}, expected 1", f.dim())));
    }
    if !f.minimizer_set().is_convex_interval() {
        return Err(AlgorithmError::Config("instance minimizer set is not an interval".into()));
    }
    let kappa_eff = params.kappa_eff();
    let n = params.n();
    let delta = params.grid_delta();
    let per_point = params.per_point();
    let threshold = params.mu * delta / 2.0;
    let (mut a, mut b_l, mut b_u) = (0.0, -params.d_cap / 2.0, params.d_cap / 2.0);
    let mut k: i64 = 1;
    let mut trace = Vec::new();
    let mut stopped_early = false;
    let start = oracle.used();

    let finish = |a: f64, b_l: f64, b_u: f64, trace: Vec<BisectStep>, stopped: bool, used: u64| BisectReport {
        a,
        gap: f.value(&[a]) - f.f_star(),
        queries: used - start,
        iterations: trace.len(),
        stopped_early: stopped,
        n,
        grid_delta: delta,
        kappa_eff,
        per_point,
        b_l,
        b_u,
        theorem_bound: params.theorem_bound(),
        trace,
    };

    while k <= n {
        let d_cur = a - b_l;
        let half = (delta / 2.0).min(d_cur / 2.0);
        let gamma = (delta).min(d_cur);
        let mut means = vec![0.0; kappa_eff + 2];
        for (j, m) in means.iter_mut().enumerate().skip(1) {
            let x = a - half + 2.0 * half * (j - 1) as f64 / kappa_eff as f64;
            let mut s = 0.0;
            for _ in 0..per_point {
                match oracle.query_1d(x) {
                    Ok(g) => s += g,
                    Err(OracleError::BudgetExhausted(_)) => {
                        let partial = finish(a, b_l, b_u, trace, false, oracle.used());
                        return Err(AlgorithmError::Aborted { partial: Box::new(partial) });
                    }
                    Err(e) => return Err(e.into()),
                }
            }
            *m = s / per_point as f64;
        }
        let g = aggregates(&means, kappa_eff);
        let (z, branch) = decide(&g, kappa_eff, threshold);
        trace.push(BisectStep { k, a, b_l, b_u, gamma, z, g_z: g[z], branch });
        match branch {
            Branch::Stop => {
                stopped_early = true;
                break;
            }
            Branch::SideUpper => b_u = a,
            Branch::SideLower => b_l = a,
            Branch::ShrinkUpper => b_u = a + gamma / 4.0,
            Branch::ShrinkLower => b_l = a - gamma / 4.0,
        }
        a = (b_u + b_l) / 2.0;
        k += 1;
    }
    Ok(finish(a, b_l, b_u, trace, stopped_early, oracle.used()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RangeEstimate {
    pub d_cap: f64,
    pub mean: f64,
    pub slack: f64,
    pub queries: u64,
}

/// `D = 2(|mean f'(0)| + σ√(2 log(2/δ)/T₀))/μ` from `T₀` queries at the origin.
pub fn estimate_range_1d(
    oracle: &mut GaussianOracle<'_>,
    mu: f64,
    t0: u64,
    delta: f64,
) -> Result<RangeEstimate, AlgorithmError> {
    if t0 == 0 || !(mu > 0.0) || !(delta > 0.0 && delta < 1.0) {
        return Err(AlgorithmError::Config(format!("need T0 >= 1, mu > 0, delta in (0,1): {t0}, {mu}, {delta}")));
    }
    let mut s = 0.0;
    for _ in 0..t0 {
        s += oracle.query_1d(0.0)?;
    }
    let mean = s / t0 as f64;
    let sigma = oracle.config().sigma;
    let slack = sigma * (2.0 * (2.0 / delta).ln() / t0 as f64).sqrt();
    Ok(RangeEstimate { d_cap: 2.0 * (mean.abs() + slack) / mu, mean, slack, queries: t0 })
}

/// Spends `⌊fraction · T⌋` queries estimating `D`, then searches with the rest.
pub fn run_bisect1d_with_range(
    oracle: &mut GaussianOracle<'_>,
    budget: u64,
    fraction: f64,
    mu: f64,
    l: f64,
    sigma: f64,
    delta: f64,
) -> Result<(RangeEstimate, BisectReport), AlgorithmError> {
    let t0 = ((fraction * budget as f64).floor() as u64).max(1);
    let range = estimate_range_1d(oracle, mu, t0, delta / 2.0)?;
    let params = BisectParams {
        budget: budget - t0,
        d_cap: range.d_cap.max(f64::MIN_POSITIVE),
        mu,
        l,
        sigma,
        delta: delta / 2.0,
    };
    let report = run_bisect1d(oracle, &params)?;
    Ok((range, report))
}

/// `(L/2)(b − a)²/(n − 1)`.
pub fn riemann_gap_bound(l: f64, a: f64, b: f64, n: usize) -> f64 {
    assert!(n >= 2 && a < b, "need n >= 2 and a < b");
    l / 2.0 * (b - a).powi(2) / (n - 1) as f64
}

/// Left Riemann sum `(b − a)/(n − 1) · Σ_{i=1}^{n−1} g(a_i)` on the uniform grid `a_1 = a, …, a_n = b`.
pub fn left_riemann_sum(g: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    assert!(n >= 2 && a < b, "need n >= 2 and a < b");
    let h = (b - a) / (n - 1) as f64;
    (0..n - 1).map(|i| g(a + h * i as f64)).sum::<f64>() * h
}

/// Gap `f(x) − f*` helper for 1-D instances.
pub fn gap_1d(f: &dyn Objective, x: f64) -> f64 {
    f.value(&[x]) - f.f_star()
}
