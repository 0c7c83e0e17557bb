//! Elementary objectives used as baselines and test doubles.

use super::{Certificate, ClassTag, FunctionError, MinimizerSet, Objective, SamplingHint, Sphere};
use crate::linalg;

/// `f(x) = (c/2)‖x − x*‖²`.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadratic {
    pub curvature: f64,
    pub center: Vec<f64>,
}

impl Quadratic {
    pub fn new(curvature: f64, center: Vec<f64>) -> Self {
        Quadratic { curvature, center }
    }
}

impl Objective for Quadratic {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        let r = linalg::dist(x, &self.center);
        self.curvature * r * r / 2.0
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        linalg::scale(&linalg::sub(x, &self.center), self.curvature)
    }

    fn minimizer_set(&self) -> MinimizerSet {
        if self.center.len() == 1 {
            MinimizerSet::Interval { lo: self.center[0], hi: self.center[0] }
        } else {
            MinimizerSet::Point(self.center.clone())
        }
    }

    fn certificate(&self) -> Certificate {
        Certificate {
            l: self.curvature,
            mu: self.curvature,
            tau: 1.0,
            tags: vec![ClassTag::Qc, ClassTag::Qg, ClassTag::Rsi, ClassTag::Smooth],
        }
    }
}

/// `f(x) = x⁴`: quasar-convex but without quadratic growth or PL at the origin.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Quartic1d;

impl Objective for Quartic1d {
    fn dim(&self) -> usize {
        1
    }

    fn value(&self, x: &[f64]) -> f64 {
        x[0].powi(4)
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        vec![4.0 * x[0].powi(3)]
    }

    fn minimizer_set(&self) -> MinimizerSet {
        MinimizerSet::Interval { lo: 0.0, hi: 0.0 }
    }

    fn certificate(&self) -> Certificate {
        Certificate { l: f64::INFINITY, mu: 0.0, tau: 1.0, tags: vec![ClassTag::Qc] }
    }
}

/// `x ↦ f(x − shift)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Shifted1d<F> {
    pub inner: F,
    pub shift: f64,
}

impl<F: Objective> Shifted1d<F> {
    pub fn new(inner: F, shift: f64) -> Self {
        assert_eq!(inner.dim(), 1, "Shifted1d wraps 1-D objectives");
        Shifted1d { inner, shift }
    }
}

impl<F: Objective> Objective for Shifted1d<F> {
    fn dim(&self) -> usize {
        1
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.inner.value(&[x[0] - self.shift])
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.inner.gradient(&[x[0] - self.shift])
    }

    fn minimizer_set(&self) -> MinimizerSet {
        match self.inner.minimizer_set() {
            MinimizerSet::Interval { lo, hi } => MinimizerSet::Interval { lo: lo + self.shift, hi: hi + self.shift },
            MinimizerSet::Point(z) => MinimizerSet::Interval { lo: z[0] + self.shift, hi: z[0] + self.shift },
            other => other,
        }
    }

    fn certificate(&self) -> Certificate {
        self.inner.certificate()
    }

    fn f_star(&self) -> f64 {
        self.inner.f_star()
    }

    fn check_domain(&self, x: &[f64]) -> Result<(), FunctionError> {
        if x.len() != 1 {
            return Err(FunctionError::Domain("expected a 1-D point".into()));
        }
        self.inner.check_domain(&[x[0] - self.shift])
    }

    fn boundaries(&self) -> Vec<Sphere> {
        self.inner
            .boundaries()
            .into_iter()
            .map(|s| Sphere { center: vec![s.center[0] + self.shift], radius: s.radius })
            .collect()
    }

    fn sampling_hint(&self) -> SamplingHint {
        let h = self.inner.sampling_hint();
        SamplingHint {
            anchors: h.anchors.iter().map(|a| vec![a[0] + self.shift]).collect(),
            ..h
        }
    }
}
