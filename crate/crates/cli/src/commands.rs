use std::fs;
use std::path::PathBuf;

use anyhow::Context;
use ncvx::algorithms::{run_bisect1d, run_sgd, AlgorithmError, BisectParams, SgdSchedule};
use ncvx::functions::{counterexample_eb_not_rsi, counterexample_rsi_not_starsc, d_threshold, Quadratic, Shifted1d};
use ncvx::lowerbound::{gap_floor, identification_game, theoretical_bound, BoundParams, Blind, Clairvoyant, GameAlgorithm, GameResult, SgdPlayer};
use ncvx::properties::*;
use ncvx::{linalg, seeding, ClassTag, FamilyKind, GaussianOracle, HardFamily, Objective, OracleConfig};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{usage, AlgorithmKind, BisectSpec, Counterexample, ExperimentConfig, Objective1d, Player, VerifySpec};
use crate::plot::LogLogPlot;

pub struct Ctx {
    pub cfg: ExperimentConfig,
    pub hash: String,
    pub out: PathBuf,
}

impl Ctx {
    fn path(&self, command: &str, ext: &str) -> PathBuf {
        self.out.join(format!("{command}-{}.{ext}", self.hash))
    }

    fn write_csv<R: Serialize>(&self, command: &str, rows: &[R]) -> anyhow::Result<PathBuf> {
        fs::create_dir_all(&self.out).with_context(|| format!("creating {}", self.out.display()))?;
        let path = self.path(command, "csv");
        let mut w = csv::Writer::from_path(&path).with_context(|| format!("writing {}", path.display()))?;
        for r in rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(path)
    }

    fn write_text(&self, command: &str, ext: &str, text: &str) -> anyhow::Result<PathBuf> {
        fs::create_dir_all(&self.out).with_context(|| format!("creating {}", self.out.display()))?;
        let path = self.path(command, ext);
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}

fn build_family(cfg: &ExperimentConfig) -> anyhow::Result<HardFamily> {
    let spec = cfg.require_family()?;
    match HardFamily::build(spec) {
        Ok(f) => Ok(f),
        Err(e) => usage(format!("cannot build the {} family: {e}", spec.kind)),
    }
}

fn report_errors(failed: usize, total: usize) -> bool {
    if failed > 0 {
        eprintln!("{failed} of {total} rows failed; see the error column");
    }
    failed == 0
}

// verify

#[derive(Serialize)]
struct TargetReport {
    target: String,
    reports: Vec<CheckReport>,
}

fn run_checks(f: &dyn Objective, spec: &VerifySpec, seed: u64) -> Vec<CheckReport> {
    let cert = f.certificate();
    let tau = spec.tau.unwrap_or(cert.tau);
    let mu = spec.mu.unwrap_or(cert.mu);
    let l = spec.l.unwrap_or(cert.l);
    let sampler = Sampler::for_objective(f, seed);
    let pts = sampler.points(spec.samples);
    let mut out = Vec::new();
    for tag in &cert.tags {
        let r = match tag {
            ClassTag::Qc => check_qc(f, tau, &pts, spec.tol),
            ClassTag::Qg => check_qg(f, mu, &pts, spec.tol),
            ClassTag::Rsi => check_rsi(f, mu, &pts, spec.tol),
            ClassTag::Eb => check_eb(f, mu, &pts, spec.tol),
            ClassTag::Pl => check_pl(f, mu, &pts, spec.tol),
            ClassTag::Sqc => check_sqc(f, tau, mu, &pts, spec.tol),
            ClassTag::StarSc => check_star_sc(f, mu, &pts, spec.tol),
            ClassTag::Smooth if l.is_finite() => check_smooth(f, l, &sampler.pairs(spec.samples), spec.smooth_tol),
            ClassTag::Smooth => continue,
        };
        out.push(r);
    }
    let interior = sampler.interior_points(f, spec.samples.min(1000), fd_margin(spec.fd_step));
    out.push(check_grad_fd(f, spec.fd_step, &interior, spec.fd_tol));
    out
}

pub fn verify(ctx: &Ctx) -> anyhow::Result<bool> {
    let cfg = &ctx.cfg;
    let spec = cfg.verify.clone().unwrap_or_default();
    if spec.samples == 0 {
        return usage("verify.samples must be positive");
    }
    let family;
    let counter: Box<dyn Objective>;
    let targets: Vec<(String, &dyn Objective)> = match (&cfg.family, cfg.counterexample) {
        (Some(fs), None) => {
            family = build_family(cfg)?;
            family
                .instances()
                .iter()
                .enumerate()
                .map(|(i, f)| (format!("{} instance {i}", fs.kind), f as &dyn Objective))
                .collect()
        }
        (None, Some(c)) => {
            counter = match c {
                Counterexample::EbNotRsi => Box::new(counterexample_eb_not_rsi()),
                Counterexample::RsiNotStarsc => Box::new(counterexample_rsi_not_starsc()),
            };
            vec![(format!("{c:?}"), counter.as_ref())]
        }
        (Some(_), Some(_)) => return usage("set either [family] or counterexample, not both"),
        (None, None) => return usage("verify needs a [family] section or a counterexample"),
    };

    let results: Vec<TargetReport> = targets
        .par_iter()
        .enumerate()
        .map(|(i, (name, f))| TargetReport {
            target: name.clone(),
            reports: run_checks(*f, &spec, seeding::derive_seed(spec.seed, i as u64)),
        })
        .collect();

    let mut props: Vec<Property> = Vec::new();
    for r in results.iter().flat_map(|t| &t.reports) {
        if !props.contains(&r.property) {
            props.push(r.property);
        }
    }
    println!("config {}: {} target(s), {} samples each", ctx.hash, results.len(), spec.samples);
    println!("{:<10} {:<6} {:>16} {:>10}", "property", "result", "worst_violation", "samples");
    let mut all_ok = true;
    let mut witnesses = Vec::new();
    for p in props {
        let rs: Vec<(&str, &CheckReport)> = results
            .iter()
            .flat_map(|t| t.reports.iter().map(move |r| (t.target.as_str(), r)))
            .filter(|(_, r)| r.property == p)
            .collect();
        let ok = rs.iter().all(|(_, r)| r.passed);
        let (who, worst) = rs
            .iter()
            .max_by(|a, b| a.1.worst_violation.total_cmp(&b.1.worst_violation))
            .copied()
            .expect("at least one report");
        let n: usize = rs.iter().map(|(_, r)| r.samples_used).sum();
        println!("{:<10} {:<6} {:>16.3e} {:>10}", p.to_string(), if ok { "pass" } else { "FAIL" }, worst.worst_violation, n);
        if !ok {
            all_ok = false;
            witnesses.push(format!("witness for {p} ({who}): {:?}", worst.witness));
        }
    }
    for w in &witnesses {
        println!("{w}");
    }
    let path = ctx.write_text("verify", "json", &serde_json::to_string_pretty(&results)?)?;
    println!("report: {}", path.display());
    Ok(all_ok)
}

// SGD

struct SgdSetup {
    family: HardFamily,
    instance: usize,
    schedule: SgdSchedule,
    x1: Vec<f64>,
}

fn default_schedule(family: &HardFamily, given: Option<SgdSchedule>) -> anyhow::Result<SgdSchedule> {
    let p = &family.params;
    match (p.family_kind, given) {
        (FamilyKind::Qc, _) => usage(
            "the QC family is exercised through `game` and `verify` only: projected SGD on the ball is not implemented",
        ),
        (_, Some(s)) => Ok(s),
        (FamilyKind::Rsi, None) => Ok(SgdSchedule::Rsi { mu: p.mu, l: p.l }),
        (FamilyKind::Qcqg, None) => Ok(SgdSchedule::Qcqg { mu: p.mu, tau: p.tau, l: p.l }),
    }
}

fn sgd_setup(cfg: &ExperimentConfig) -> anyhow::Result<SgdSetup> {
    let family = build_family(cfg)?;
    let spec = cfg.sgd.clone().unwrap_or_default();
    let schedule = default_schedule(&family, spec.schedule)?;
    if spec.instance >= family.m() {
        return usage(format!("sgd.instance = {} but the family has {} members", spec.instance, family.m()));
    }
    let d = family.params.d;
    let x1 = spec.x1.unwrap_or_default();
    if x1.len() > d {
        return usage(format!("sgd.x1 has {} coordinates, the family dimension is {d}", x1.len()));
    }
    Ok(SgdSetup { instance: spec.instance, schedule, x1: linalg::pad(&x1, d), family })
}

#[derive(Debug, Clone, Serialize)]
struct SgdRow {
    config_hash: String,
    family: String,
    instance: usize,
    #[serde(rename = "T")]
    horizon: u64,
    seed: u64,
    gap: Option<f64>,
    weighted_gap: Option<f64>,
    final_gap: Option<f64>,
    queries: u64,
    error: String,
}

fn sgd_cell(s: &SgdSetup, hash: &str, horizon: u64, seed: u64) -> SgdRow {
    let p = &s.family.params;
    let f = s.family.instance(s.instance);
    let cfg = OracleConfig::new(p.sigma, p.d0, seed).with_stream(horizon).with_budget(horizon);
    let run = GaussianOracle::new(cfg, f)
        .map_err(AlgorithmError::from)
        .and_then(|mut o| run_sgd(&mut o, &s.x1, horizon, &s.schedule, seeding::derive_seed(seed, horizon)));
    let mut row = SgdRow {
        config_hash: hash.to_string(),
        family: p.family_kind.to_string(),
        instance: s.instance,
        horizon,
        seed,
        gap: None,
        weighted_gap: None,
        final_gap: None,
        queries: 0,
        error: String::new(),
    };
    match run {
        Ok(r) => {
            row.gap = Some(r.gap);
            row.weighted_gap = Some(r.weighted_gap);
            row.final_gap = Some(r.final_gap);
            row.queries = r.queries;
        }
        Err(e) => row.error = e.to_string(),
    }
    row
}

fn cells(horizons: &[u64], seeds: &[u64]) -> Vec<(u64, u64)> {
    horizons.iter().flat_map(|&t| seeds.iter().map(move |&s| (t, s))).collect()
}

fn sgd_rows(ctx: &Ctx) -> anyhow::Result<Vec<SgdRow>> {
    let setup = sgd_setup(&ctx.cfg)?;
    let seeds = ctx.cfg.require_seeds()?;
    let horizons = ctx.cfg.require_horizons()?;
    let mut rows: Vec<SgdRow> = cells(horizons, seeds)
        .par_iter()
        .map(|&(t, s)| sgd_cell(&setup, &ctx.hash, t, s))
        .collect();
    rows.sort_by_key(|r| (r.horizon, r.seed));
    Ok(rows)
}

pub fn run_sgd_cmd(ctx: &Ctx) -> anyhow::Result<bool> {
    let rows = sgd_rows(ctx)?;
    let path = ctx.write_csv("run-sgd", &rows)?;
    println!("{} runs written to {}", rows.len(), path.display());
    Ok(report_errors(rows.iter().filter(|r| !r.error.is_empty()).count(), rows.len()))
}

// Bisection

#[derive(Debug, Clone, Serialize)]
struct BisectRow {
    config_hash: String,
    objective: String,
    #[serde(rename = "T")]
    horizon: u64,
    seed: u64,
    x_hat: Option<f64>,
    gap: Option<f64>,
    queries: u64,
    theorem_bound: Option<f64>,
    iterations: Option<usize>,
    stopped_early: Option<bool>,
    error: String,
}

fn objective_1d(o: &Objective1d) -> anyhow::Result<(String, Box<dyn Objective>)> {
    match *o {
        Objective1d::Quadratic { curvature, center } => {
            if !(curvature > 0.0 && center.is_finite()) {
                return usage(format!("quadratic needs curvature > 0 and a finite center, got {curvature}, {center}"));
            }
            Ok(("quadratic".into(), Box::new(Quadratic::new(curvature, vec![center]))))
        }
        Objective1d::Piecewise { shift } => {
            if !shift.is_finite() {
                return usage("piecewise shift must be finite");
            }
            Ok(("piecewise".into(), Box::new(Shifted1d::new(counterexample_rsi_not_starsc(), shift))))
        }
    }
}

fn bisect_params(spec: &BisectSpec) -> anyhow::Result<BisectParams> {
    let p = BisectParams { budget: 0, d_cap: spec.d_cap, mu: spec.mu, l: spec.l, sigma: spec.sigma, delta: spec.delta };
    if !(p.mu > 0.0 && p.l >= p.mu && p.d_cap > 0.0 && p.sigma > 0.0 && p.delta > 0.0 && p.delta < 1.0) {
        return usage(format!("bisect needs mu > 0, L >= mu, D > 0, sigma > 0, delta in (0, 1): {spec:?}"));
    }
    Ok(p)
}

fn bisect_cell(f: &dyn Objective, name: &str, params: BisectParams, hash: &str, seed: u64) -> BisectRow {
    let horizon = params.budget;
    let mut row = BisectRow {
        config_hash: hash.to_string(),
        objective: name.to_string(),
        horizon,
        seed,
        x_hat: None,
        gap: None,
        queries: 0,
        theorem_bound: None,
        iterations: None,
        stopped_early: None,
        error: String::new(),
    };
    let cfg = OracleConfig::new(params.sigma, 1, seed).with_stream(horizon).with_budget(horizon);
    let run = GaussianOracle::new(cfg, f)
        .map_err(AlgorithmError::from)
        .and_then(|mut o| run_bisect1d(&mut o, &params));
    let report = match run {
        Ok(r) => r,
        Err(AlgorithmError::Aborted { partial }) => {
            row.error = "query budget exhausted".into();
            *partial
        }
        Err(e) => {
            row.error = e.to_string();
            return row;
        }
    };
    row.x_hat = Some(report.a);
    row.gap = Some(report.gap);
    row.queries = report.queries;
    row.theorem_bound = Some(report.theorem_bound);
    row.iterations = Some(report.iterations);
    row.stopped_early = Some(report.stopped_early);
    row
}

fn bisect_rows(ctx: &Ctx) -> anyhow::Result<Vec<BisectRow>> {
    let cfg = &ctx.cfg;
    let Some(spec) = &cfg.bisect else {
        return usage("this command needs a [bisect] section");
    };
    let (name, f) = objective_1d(&spec.objective)?;
    let params = bisect_params(spec)?;
    let seeds = cfg.require_seeds()?;
    let budgets = if cfg.horizons.is_empty() {
        vec![spec.budget.unwrap_or_else(|| params.min_budget())]
    } else {
        cfg.require_horizons()?.to_vec()
    };
    let mut rows: Vec<BisectRow> = cells(&budgets, seeds)
        .par_iter()
        .map(|&(t, s)| bisect_cell(f.as_ref(), &name, BisectParams { budget: t, ..params }, &ctx.hash, s))
        .collect();
    rows.sort_by_key(|r| (r.horizon, r.seed));
    Ok(rows)
}

pub fn run_bisect_cmd(ctx: &Ctx) -> anyhow::Result<bool> {
    let rows = bisect_rows(ctx)?;
    let path = ctx.write_csv("run-bisect", &rows)?;
    let within = rows.iter().filter(|r| matches!((r.gap, r.theorem_bound), (Some(g), Some(b)) if g <= b)).count();
    println!("{} runs written to {}; {within} within the theorem bound", rows.len(), path.display());
    Ok(report_errors(rows.iter().filter(|r| !r.error.is_empty()).count(), rows.len()))
}

// Rate sweep

#[derive(Debug, Clone, Serialize)]
struct SweepRow {
    config_hash: String,
    family: String,
    algorithm: String,
    #[serde(rename = "T")]
    horizon: u64,
    seed: u64,
    gap: Option<f64>,
    error: String,
}

/// OLS fit of `log10 mean` on `log10 T`; returns `(slope, intercept)`.
fn fit(means: &[(f64, f64)]) -> (f64, f64) {
    let pts: Vec<(f64, f64)> = means.iter().filter(|(t, g)| *t > 0.0 && *g > 0.0).map(|(t, g)| (t.log10(), g.log10())).collect();
    if pts.len() < 2 {
        return (f64::NAN, f64::NAN);
    }
    let (lx, ly): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
    let slope = linalg::ols_slope(&lx, &ly);
    let n = lx.len() as f64;
    (slope, ly.iter().sum::<f64>() / n - slope * lx.iter().sum::<f64>() / n)
}

pub fn rate_sweep(ctx: &Ctx) -> anyhow::Result<bool> {
    let cfg = &ctx.cfg;
    let algorithm = cfg.algorithm.unwrap_or(if cfg.bisect.is_some() && cfg.family.is_none() {
        AlgorithmKind::Bisect
    } else {
        AlgorithmKind::Sgd
    });
    cfg.require_horizons()?;
    let rows: Vec<SweepRow> = match algorithm {
        AlgorithmKind::Sgd => sgd_rows(ctx)?
            .into_iter()
            .map(|r| SweepRow {
                config_hash: r.config_hash,
                family: r.family,
                algorithm: algorithm.to_string(),
                horizon: r.horizon,
                seed: r.seed,
                gap: r.gap,
                error: r.error,
            })
            .collect(),
        AlgorithmKind::Bisect => bisect_rows(ctx)?
            .into_iter()
            .map(|r| SweepRow {
                config_hash: r.config_hash,
                family: format!("1d-{}", r.objective),
                algorithm: algorithm.to_string(),
                horizon: r.horizon,
                seed: r.seed,
                gap: r.gap,
                error: r.error,
            })
            .collect(),
    };
    let csv_path = ctx.write_csv("rate-sweep", &rows)?;

    let samples: Vec<(f64, f64)> = rows.iter().filter_map(|r| r.gap.map(|g| (r.horizon as f64, g))).collect();
    let mut means = Vec::new();
    for &t in &cfg.horizons {
        let gs: Vec<f64> = rows.iter().filter(|r| r.horizon == t && r.error.is_empty()).filter_map(|r| r.gap).collect();
        if !gs.is_empty() {
            means.push((t as f64, gs.iter().sum::<f64>() / gs.len() as f64));
        }
    }
    let (slope, intercept) = fit(&means);
    let title = format!("{} on {} ({})", algorithm, rows.first().map(|r| r.family.as_str()).unwrap_or("?"), ctx.hash);
    let svg = LogLogPlot { title: &title, samples: &samples, means: &means, slope, intercept }.render();
    let svg_path = ctx.write_text("rate-sweep", "svg", &svg)?;
    for (t, g) in &means {
        println!("T = {t:>10}  mean gap {g:.4e}");
    }
    println!("fitted slope {slope:.3}");
    println!("csv: {}\nsvg: {}", csv_path.display(), svg_path.display());
    Ok(report_errors(rows.iter().filter(|r| !r.error.is_empty()).count(), rows.len()))
}

// Identification game

#[derive(Serialize)]
struct GameRecord {
    game_seed: u64,
    result: GameResult,
}

#[derive(Debug, Clone, Serialize)]
struct GameRow {
    config_hash: String,
    algorithm: String,
    game_seed: u64,
    trial: usize,
    seed: u64,
    instance: usize,
    gap: Option<f64>,
    identified: bool,
    queries: u64,
    error: String,
}

pub fn game(ctx: &Ctx) -> anyhow::Result<bool> {
    let cfg = &ctx.cfg;
    let Some(spec) = &cfg.game else {
        return usage("game needs a [game] section");
    };
    if spec.trials == 0 || spec.horizon == 0 {
        return usage("game.trials and game.horizon must be positive");
    }
    let family = build_family(cfg)?;
    let seeds = cfg.require_seeds()?;
    let player: Box<dyn GameAlgorithm> = match spec.algorithm {
        Player::Clairvoyant => Box::new(Clairvoyant),
        Player::Blind => Box::new(Blind),
        Player::Sgd => Box::new(SgdPlayer { schedule: default_schedule(&family, spec.schedule)?, x1: vec![] }),
    };
    let records: Vec<GameRecord> = seeds
        .iter()
        .map(|&s| GameRecord { game_seed: s, result: identification_game(player.as_ref(), &family, spec.horizon, spec.trials, s) })
        .collect();
    let mut rows = Vec::new();
    for rec in &records {
        for t in &rec.result.per_trial {
            rows.push(GameRow {
                config_hash: ctx.hash.clone(),
                algorithm: rec.result.algorithm.clone(),
                game_seed: rec.game_seed,
                trial: t.trial,
                seed: t.seed,
                instance: t.i,
                gap: t.error.is_none().then_some(t.gap),
                identified: t.identified,
                queries: t.queries,
                error: t.error.clone().unwrap_or_default(),
            });
        }
    }
    let csv_path = ctx.write_csv("game", &rows)?;
    let json_path = ctx.write_text("game", "json", &serde_json::to_string_pretty(&records)?)?;
    println!("{} family, m = {}, gap floor {:.4e}", family.params.family_kind, family.m(), gap_floor(&family));
    for rec in &records {
        let r = &rec.result;
        println!(
            "seed {}: {} trials, misid rate {:.3}, average gap {:.4e} ± {:.1e}, failed {}",
            rec.game_seed, r.trials, r.misid_rate, r.avg_gap, r.gap_stderr, r.failed
        );
    }
    println!("csv: {}\njson: {}", csv_path.display(), json_path.display());
    Ok(report_errors(rows.iter().filter(|r| !r.error.is_empty()).count(), rows.len()))
}

// Lower bound

#[derive(Debug, Clone, Serialize)]
struct BoundRow {
    config_hash: String,
    kind: String,
    #[serde(rename = "T")]
    horizon: u64,
    delta_star: Option<f64>,
    bound: Option<f64>,
    error: String,
}

pub fn lower_bound(ctx: &Ctx) -> anyhow::Result<bool> {
    let cfg = &ctx.cfg;
    let Some(spec) = &cfg.lower_bound else {
        return usage("lower-bound needs a [lower_bound] section");
    };
    let horizons = cfg.require_horizons()?;
    let d = spec
        .d
        .unwrap_or_else(|| d_threshold(spec.kind, spec.tau, spec.l / spec.mu).ceil().max(1.0) as usize);
    println!("{:>12} {:>14} {:>14}", "T", "delta_star", "bound");
    let rows: Vec<BoundRow> = horizons
        .iter()
        .map(|&t| {
            let p = BoundParams {
                kind: spec.kind,
                mu: spec.mu,
                tau: spec.tau,
                l: spec.l,
                sigma: spec.sigma,
                d_cap: spec.d_cap,
                horizon: t,
                d,
                qc_t_constant: spec.qc_t_constant,
            };
            let mut row =
                BoundRow { config_hash: ctx.hash.clone(), kind: spec.kind.to_string(), horizon: t, delta_star: None, bound: None, error: String::new() };
            match theoretical_bound(&p) {
                Ok(b) => {
                    println!("{t:>12} {:>14.6e} {:>14.6e}", b.delta_star, b.bound);
                    row.delta_star = Some(b.delta_star);
                    row.bound = Some(b.bound);
                }
                Err(e) => {
                    println!("{t:>12} {e}");
                    row.error = e.to_string();
                }
            }
            row
        })
        .collect();
    let path = ctx.write_csv("lower-bound", &rows)?;
    println!("csv: {}", path.display());
    Ok(report_errors(rows.iter().filter(|r| !r.error.is_empty()).count(), rows.len()))
}
