//! Lifting a `d0`-dimensional objective to `d ≥ d0` dimensions.

use super::{Certificate, FunctionError, MinimizerSet, Objective, SamplingHint, Sphere};
use crate::linalg;

/// `F(x) = f(x_A)` where `x_A` is the first `d0` coordinates of `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedded<F> {
    inner: F,
    d: usize,
}

/// Embeds an objective with a unique minimizer into `d` dimensions.
pub fn embed<F: Objective>(f: F, d: usize) -> Result<Embedded<F>, FunctionError> {
    if !matches!(f.minimizer_set(), MinimizerSet::Point(_)) {
        return Err(FunctionError::Domain(
            "embedding requires a unique global minimizer".into(),
        ));
    }
    Embedded::lift(f, d)
}

impl<F: Objective> Embedded<F> {
    /// Embeds without the unique-minimizer requirement (used for reference functions).
    pub fn lift(f: F, d: usize) -> Result<Self, FunctionError> {
        if d < f.dim() {
            return Err(FunctionError::Domain(format!(
                "target dimension {d} is below the base dimension {}",
                f.dim()
            )));
        }
        Ok(Embedded { inner: f, d })
    }

    pub fn inner(&self) -> &F {
        &self.inner
    }

    pub fn base_dim(&self) -> usize {
        self.inner.dim()
    }
}

impl<F: Objective> Objective for Embedded<F> {
    fn dim(&self) -> usize {
        self.d
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.inner.value(&x[..self.inner.dim()])
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        linalg::pad(&self.inner.gradient(&x[..self.inner.dim()]), self.d)
    }

    fn minimizer_set(&self) -> MinimizerSet {
        if self.d == self.inner.dim() {
            return self.inner.minimizer_set();
        }
        match self.inner.minimizer_set() {
            MinimizerSet::Point(z) => MinimizerSet::Affine { z, dim: self.d },
            MinimizerSet::Ball { center, radius } => MinimizerSet::Cylinder { center, radius, dim: self.d },
            MinimizerSet::Affine { z, .. } => MinimizerSet::Affine { z, dim: self.d },
            MinimizerSet::Cylinder { center, radius, .. } => MinimizerSet::Cylinder { center, radius, dim: self.d },
            MinimizerSet::Interval { lo, hi } => MinimizerSet::Cylinder {
                center: vec![(lo + hi) / 2.0],
                radius: (hi - lo) / 2.0,
                dim: self.d,
            },
        }
    }

    fn certificate(&self) -> Certificate {
        self.inner.certificate()
    }

    fn f_star(&self) -> f64 {
        self.inner.f_star()
    }

    fn check_domain(&self, x: &[f64]) -> Result<(), FunctionError> {
        if x.len() != self.d {
            return Err(FunctionError::Domain(format!(
                "expected dimension {}, got {}",
                self.d,
                x.len()
            )));
        }
        self.inner.check_domain(&x[..self.inner.dim()])
    }

    fn boundaries(&self) -> Vec<Sphere> {
        self.inner.boundaries()
    }

    fn sampling_hint(&self) -> SamplingHint {
        let h = self.inner.sampling_hint();
        SamplingHint {
            anchors: h.anchors.iter().map(|a| linalg::pad(a, self.d)).collect(),
            ..h
        }
    }
}
