//! Counterexamples separating the function classes.

use super::{Certificate, ClassTag, FunctionError, MinimizerSet, Objective, SamplingHint, Sphere};

/// `f(x, y) = (√2 r + r sin(r − θ) + 1)² − 1` on the closed unit disk.
///
/// Satisfies an error bound around the origin but no restricted secant inequality.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Spiral;

pub fn counterexample_eb_not_rsi() -> Spiral {
    Spiral
}

impl Spiral {
    /// Witness point `r = 1, θ = 1 − 5π/4` where `⟨∇f(x), x⟩ = 0`.
    pub fn witness() -> [f64; 2] {
        let theta = 1.0 - 5.0 * std::f64::consts::PI / 4.0;
        [theta.cos(), theta.sin()]
    }

    /// Radial and angular partial derivatives `(g_r, g_θ)` at polar `(r, θ)`.
    pub fn polar_partials(r: f64, theta: f64) -> (f64, f64) {
        let s = (r - theta).sin();
        let c = (r - theta).cos();
        let h = std::f64::consts::SQRT_2 * r + r * s + 1.0;
        (2.0 * h * (s + r * c + std::f64::consts::SQRT_2), -2.0 * h * r * c)
    }
}

impl Objective for Spiral {
    fn dim(&self) -> usize {
        2
    }

    fn value(&self, x: &[f64]) -> f64 {
        let r = x[0].hypot(x[1]);
        if r > 1.0 {
            return f64::NAN;
        }
        let theta = x[1].atan2(x[0]);
        let h = std::f64::consts::SQRT_2 * r + r * (r - theta).sin() + 1.0;
        h * h - 1.0
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let r = x[0].hypot(x[1]);
        if r == 0.0 {
            return vec![0.0, 0.0];
        }
        if r > 1.0 {
            return vec![f64::NAN, f64::NAN];
        }
        let theta = x[1].atan2(x[0]);
        let s = (r - theta).sin();
        let c = (r - theta).cos();
        let h = std::f64::consts::SQRT_2 * r + r * s + 1.0;
        let g_r = 2.0 * h * (s + r * c + std::f64::consts::SQRT_2);
        // g_θ / r
        let g_t = -2.0 * h * c;
        let (st, ct) = theta.sin_cos();
        vec![ct * g_r - st * g_t, st * g_r + ct * g_t]
    }

    fn minimizer_set(&self) -> MinimizerSet {
        MinimizerSet::Point(vec![0.0, 0.0])
    }

    fn certificate(&self) -> Certificate {
        Certificate { l: f64::INFINITY, mu: 0.0, tau: 1.0, tags: vec![ClassTag::Eb] }
    }

    fn check_domain(&self, x: &[f64]) -> Result<(), FunctionError> {
        if x.len() != 2 || !x.iter().all(|v| v.is_finite()) {
            return Err(FunctionError::Domain("expected a finite point in R^2".into()));
        }
        let r = x[0].hypot(x[1]);
        if r > 1.0 + 1e-12 {
            return Err(FunctionError::Domain(format!(
                "point at radius {r} lies outside the closed unit disk"
            )));
        }
        Ok(())
    }

    fn boundaries(&self) -> Vec<Sphere> {
        vec![Sphere { center: vec![0.0, 0.0], radius: 0.0 }]
    }

    fn sampling_hint(&self) -> SamplingHint {
        SamplingHint {
            anchors: vec![vec![0.0, 0.0]],
            radii: vec![0.25, 0.5, 1.0],
            container_radius: 1.0,
        }
    }
}

/// 1-D function that is 1-RSI and 3-smooth but not star strongly convex.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PiecewiseRsi1d;

pub fn counterexample_rsi_not_starsc() -> PiecewiseRsi1d {
    PiecewiseRsi1d
}

impl PiecewiseRsi1d {
    pub fn f(x: f64) -> f64 {
        let ax = x.abs();
        if ax < 1.0 {
            1.5 * x * x
        } else if ax < 1.5 {
            -1.5 * x * x + 6.0 * ax - 3.0
        } else {
            1.5 + x * x / 2.0
        }
    }

    pub fn df(x: f64) -> f64 {
        let ax = x.abs();
        if ax < 1.0 {
            3.0 * x
        } else if ax < 1.5 {
            x.signum() * (6.0 - 3.0 * ax)
        } else {
            x
        }
    }
}

impl Objective for PiecewiseRsi1d {
    fn dim(&self) -> usize {
        1
    }

    fn value(&self, x: &[f64]) -> f64 {
        Self::f(x[0])
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        vec![Self::df(x[0])]
    }

    fn minimizer_set(&self) -> MinimizerSet {
        MinimizerSet::Interval { lo: 0.0, hi: 0.0 }
    }

    fn certificate(&self) -> Certificate {
        Certificate { l: 3.0, mu: 1.0, tau: 1.0, tags: vec![ClassTag::Rsi, ClassTag::Smooth] }
    }

    fn boundaries(&self) -> Vec<Sphere> {
        vec![
            Sphere { center: vec![0.0], radius: 1.0 },
            Sphere { center: vec![0.0], radius: 1.5 },
        ]
    }

    fn sampling_hint(&self) -> SamplingHint {
        SamplingHint {
            anchors: vec![vec![0.0]],
            radii: vec![0.5, 1.0, 1.5, 2.0, 4.0],
            container_radius: 5.0,
        }
    }
}
