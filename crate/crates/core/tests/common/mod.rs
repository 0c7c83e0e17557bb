#![allow(dead_code)]

use ncvx::functions::Objective;
use ncvx::linalg;

/// Plain bisection on `[lo, hi]` for a sign-changing continuous `f`.
pub fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let flo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (f(mid) > 0.0) == (flo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Point at distance `r` from `z` along the first axis.
pub fn along_axis(z: &[f64], r: f64) -> Vec<f64> {
    let mut x = z.to_vec();
    x[0] += r;
    x
}

/// Point at distance `r` from `z` along a fixed unit direction.
pub fn along(z: &[f64], dir: &[f64], r: f64) -> Vec<f64> {
    let n = linalg::norm(dir);
    z.iter().zip(dir).map(|(a, b)| a + r * b / n).collect()
}

pub fn center(d0: usize, norm: f64) -> Vec<f64> {
    let mut z: Vec<f64> = (0..d0).map(|i| ((i as f64) * 0.7 + 0.3).sin()).collect();
    let n = linalg::norm(&z);
    z.iter_mut().for_each(|c| *c *= norm / n);
    z
}

pub fn grad_norm(f: &dyn Objective, x: &[f64]) -> f64 {
    linalg::norm(&f.gradient(x))
}
