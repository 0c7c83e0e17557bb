//! Sampled certificate checkers for the function classes.
//!
//! A passing report means "no violation found at N samples"; it never certifies
//! membership over the whole space.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::functions::{Objective, SamplingHint};
use crate::{linalg, seeding};

/// Default absolute slack on inequality checks, scaled by `max(1, |f(x) − f*|)`.
pub const DEFAULT_TOL: f64 = 1e-9;
/// Default relative slack on the Lipschitz-gradient check.
pub const SMOOTH_TOL: f64 = 1e-6;
/// Default relative error bound for finite-difference gradient checks.
pub const FD_TOL: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Property {
    Qc,
    Qg,
    Rsi,
    Eb,
    Pl,
    Sqc,
    StarSc,
    Smooth,
    GradFd,
}

impl std::fmt::Display for Property {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{self:?}")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub property: Property,
    pub passed: bool,
    /// Largest normalized excess over the inequality (0 when none is positive).
    pub worst_violation: f64,
    /// Point attaining the largest normalized excess (signed, so also the tightest point on a pass).
    pub witness: Vec<f64>,
    pub samples_used: usize,
    pub tolerance: f64,
}

impl CheckReport {
    pub fn summary(&self) -> String {
        if self.passed {
            format!(
                "{}: no violation found at {} samples (worst {:.3e})",
                self.property, self.samples_used, self.worst_violation
            )
        } else {
            format!(
                "{}: violated, worst {:.3e} > {:.1e} at {:?}",
                self.property, self.worst_violation, self.tolerance, self.witness
            )
        }
    }
}

fn report<I>(property: Property, tol: f64, excesses: I) -> CheckReport
where
    I: IntoIterator<Item = (f64, Vec<f64>)>,
{
    let mut worst = f64::NEG_INFINITY;
    let mut witness = Vec::new();
    let mut n = 0;
    for (e, x) in excesses {
        n += 1;
        // NaN counts as a violation.
        let e = if e.is_nan() { f64::INFINITY } else { e };
        if e > worst || witness.is_empty() {
            worst = e;
            witness = x;
        }
    }
    let worst_violation = worst.max(0.0);
    CheckReport {
        property,
        passed: n > 0 && worst_violation <= tol,
        worst_violation,
        witness,
        samples_used: n,
        tolerance: tol,
    }
}

struct Eval {
    gap: f64,
    g: Vec<f64>,
    dx: Vec<f64>,
}

fn eval(f: &dyn Objective, x: &[f64]) -> Eval {
    let p = f.minimizer_set().project(x);
    Eval { gap: f.value(x) - f.f_star(), g: f.gradient(x), dx: linalg::sub(x, &p) }
}

fn value_scale(gap: f64) -> f64 {
    gap.abs().max(1.0)
}

/// `f(x) − f* ≤ (1/τ)⟨∇f(x), x − x_p⟩`, checked as `τ(f − f*) − ⟨∇f, x − x_p⟩ ≤ 0`.
pub fn check_qc(f: &dyn Objective, tau: f64, points: &[Vec<f64>], tol: f64) -> CheckReport {
    report(Property::Qc, tol, points.iter().map(|x| {
        let e = eval(f, x);
        ((tau * e.gap - linalg::dot(&e.g, &e.dx)) / value_scale(e.gap), x.clone())
    }))
}

/// `f(x) − f* ≥ (μ/2)‖x − x_p‖²`.
pub fn check_qg(f: &dyn Objective, mu: f64, points: &[Vec<f64>], tol: f64) -> CheckReport {
    report(Property::Qg, tol, points.iter().map(|x| {
        let e = eval(f, x);
        let r2 = linalg::dot(&e.dx, &e.dx);
        ((mu / 2.0 * r2 - e.gap) / value_scale(e.gap), x.clone())
    }))
}

/// `⟨∇f(x), x − x_p⟩ ≥ μ‖x − x_p‖²`.
pub fn check_rsi(f: &dyn Objective, mu: f64, points: &[Vec<f64>], tol: f64) -> CheckReport {
    report(Property::Rsi, tol, points.iter().map(|x| {
        let e = eval(f, x);
        let r2 = linalg::dot(&e.dx, &e.dx);
        ((mu * r2 - linalg::dot(&e.g, &e.dx)) / value_scale(e.gap), x.clone())
    }))
}

/// `‖∇f(x)‖ ≥ μ‖x − x_p‖`.
pub fn check_eb(f: &dyn Objective, mu: f64, points: &[Vec<f64>], tol: f64) -> CheckReport {
    report(Property::Eb, tol, points.iter().map(|x| {
        let e = eval(f, x);
        let gn = linalg::norm(&e.g);
        ((mu * linalg::norm(&e.dx) - gn) / gn.max(1.0), x.clone())
    }))
}

/// `½‖∇f(x)‖² ≥ μ(f(x) − f*)`.
pub fn check_pl(f: &dyn Objective, mu: f64, points: &[Vec<f64>], tol: f64) -> CheckReport {
    report(Property::Pl, tol, points.iter().map(|x| {
        let e = eval(f, x);
        ((mu * e.gap - 0.5 * linalg::dot(&e.g, &e.g)) / value_scale(e.gap), x.clone())
    }))
}

/// `f(x) − f* ≤ (1/τ)⟨∇f(x), x − x_p⟩ − (μ/2)‖x − x_p‖²`.
pub fn check_sqc(f: &dyn Objective, tau: f64, mu: f64, points: &[Vec<f64>], tol: f64) -> CheckReport {
    let mut r = report(Property::Sqc, tol, points.iter().map(|x| {
        let e = eval(f, x);
        let r2 = linalg::dot(&e.dx, &e.dx);
        let excess = e.gap - linalg::dot(&e.g, &e.dx) / tau + mu / 2.0 * r2;
        (excess / value_scale(e.gap), x.clone())
    }));
    if tau == 1.0 {
        r.property = Property::StarSc;
    }
    r
}

/// Star strong convexity: SQC with `τ = 1`.
pub fn check_star_sc(f: &dyn Objective, mu: f64, points: &[Vec<f64>], tol: f64) -> CheckReport {
    check_sqc(f, 1.0, mu, points, tol)
}

/// `‖∇f(x) − ∇f(y)‖ ≤ L‖x − y‖`, with relative slack `tol`.
pub fn check_smooth(f: &dyn Objective, l: f64, pairs: &[(Vec<f64>, Vec<f64>)], tol: f64) -> CheckReport {
    report(Property::Smooth, tol, pairs.iter().filter_map(|(x, y)| {
        let dxy = linalg::dist(x, y);
        if dxy == 0.0 {
            return None;
        }
        let dg = linalg::dist(&f.gradient(x), &f.gradient(y));
        Some(((dg - l * dxy) / (l * dxy).max(f64::MIN_POSITIVE), x.clone()))
    }))
}

/// Central finite differences with step `h = step · max(1, ‖x‖)`; reports the
/// relative error `‖g_fd − ∇f‖ / max(‖∇f‖, 1e−8)`.
pub fn check_grad_fd(f: &dyn Objective, step: f64, points: &[Vec<f64>], tol: f64) -> CheckReport {
    report(Property::GradFd, tol, points.iter().map(|x| {
        let g = f.gradient(x);
        let fd = fd_gradient(f, x, step);
        let err = linalg::dist(&g, &fd) / linalg::norm(&g).max(1e-8);
        (err, x.clone())
    }))
}

pub fn fd_gradient(f: &dyn Objective, x: &[f64], step: f64) -> Vec<f64> {
    let h = step * linalg::norm(x).max(1.0);
    let mut xp = x.to_vec();
    (0..x.len())
        .map(|i| {
            let xi = x[i];
            xp[i] = xi + h;
            let fp = f.value(&xp);
            xp[i] = xi - h;
            let fm = f.value(&xp);
            xp[i] = xi;
            (fp - fm) / (2.0 * h)
        })
        .collect()
}

/// Smallest observed `‖∇f‖ / ‖x − x_p‖` (largest μ an EB check could pass with).
pub fn min_ratio_eb(f: &dyn Objective, points: &[Vec<f64>]) -> f64 {
    min_ratio(points, |x| {
        let e = eval(f, x);
        let r = linalg::norm(&e.dx);
        (r > 0.0).then(|| linalg::norm(&e.g) / r)
    })
}

/// Smallest observed `⟨∇f, x − x_p⟩ / ‖x − x_p‖²`.
pub fn min_ratio_rsi(f: &dyn Objective, points: &[Vec<f64>]) -> f64 {
    min_ratio(points, |x| {
        let e = eval(f, x);
        let r2 = linalg::dot(&e.dx, &e.dx);
        (r2 > 0.0).then(|| linalg::dot(&e.g, &e.dx) / r2)
    })
}

/// Smallest observed `½‖∇f‖² / (f − f*)`.
pub fn min_ratio_pl(f: &dyn Objective, points: &[Vec<f64>]) -> f64 {
    min_ratio(points, |x| {
        let e = eval(f, x);
        (e.gap > 0.0).then(|| 0.5 * linalg::dot(&e.g, &e.g) / e.gap)
    })
}

fn min_ratio(points: &[Vec<f64>], ratio: impl Fn(&[f64]) -> Option<f64>) -> f64 {
    points.iter().filter_map(|x| ratio(x)).fold(f64::INFINITY, f64::min)
}

/// Deterministic sampler: a mixture of uniform-in-ball draws around each anchor
/// at every hinted radius, plus uniform draws in the container ball.
#[derive(Debug, Clone)]
pub struct Sampler {
    pub hint: SamplingHint,
    pub dim: usize,
    pub seed: u64,
}

impl Sampler {
    pub fn new(hint: SamplingHint, dim: usize, seed: u64) -> Self {
        Sampler { hint, dim, seed }
    }

    pub fn for_objective(f: &dyn Objective, seed: u64) -> Self {
        Sampler::new(f.sampling_hint(), f.dim(), seed)
    }

    fn draw<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        let h = &self.hint;
        let origin = vec![0.0; self.dim];
        if !h.anchors.is_empty() && !h.radii.is_empty() && rng.random_bool(0.5) {
            let a = linalg::pad(&h.anchors[rng.random_range(0..h.anchors.len())], self.dim);
            let r = h.radii[rng.random_range(0..h.radii.len())];
            let x = seeding::uniform_in_ball(rng, &a, r);
            if linalg::norm(&x) <= h.container_radius {
                return x;
            }
        }
        seeding::uniform_in_ball(rng, &origin, h.container_radius)
    }

    pub fn points(&self, n: usize) -> Vec<Vec<f64>> {
        let mut rng = seeding::stream(self.seed, 1);
        (0..n).map(|_| self.draw(&mut rng)).collect()
    }

    /// Pairs `(x, x + ρ v)` with `ρ` uniform up to a random hinted radius.
    pub fn pairs(&self, n: usize) -> Vec<(Vec<f64>, Vec<f64>)> {
        let mut rng = seeding::stream(self.seed, 2);
        (0..n)
            .map(|_| {
                let x = self.draw(&mut rng);
                let r = if self.hint.radii.is_empty() {
                    self.hint.container_radius
                } else {
                    self.hint.radii[rng.random_range(0..self.hint.radii.len())]
                };
                let y = seeding::uniform_in_ball(&mut rng, &x, r);
                (x, y)
            })
            .collect()
    }

    /// `n` points at distance more than `margin` from every branch boundary of `f`.
    pub fn interior_points(&self, f: &dyn Objective, n: usize, margin: impl Fn(&[f64]) -> f64) -> Vec<Vec<f64>> {
        let mut rng = seeding::stream(self.seed, 3);
        let mut out = Vec::with_capacity(n);
        let mut tries = 0usize;
        while out.len() < n && tries < 1000 * n.max(1) {
            tries += 1;
            let x = self.draw(&mut rng);
            if f.boundary_distance(&x) > margin(&x) && f.check_domain(&x).is_ok() {
                out.push(x);
            }
        }
        out
    }
}

/// FD step margin used by the sampler contract: points within `10h` of a boundary are excluded.
pub fn fd_margin(step: f64) -> impl Fn(&[f64]) -> f64 {
    move |x: &[f64]| 10.0 * step * linalg::norm(x).max(1.0)
}

/// Uniform grid of `n ≥ 2` points on `[lo, hi]`, as 1-D points.
pub fn grid_1d(lo: f64, hi: f64, n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| vec![lo + (hi - lo) * i as f64 / (n - 1) as f64])
        .collect()
}
