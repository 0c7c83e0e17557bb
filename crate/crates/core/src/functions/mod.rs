//! Objective functions: the three hard families, their reference functions,
//! class-separating counterexamples and the low-to-high dimension embedding.

mod counter;
mod embed;
mod family;
mod hard;
mod roots;
mod simple;

pub use counter::{counterexample_eb_not_rsi, counterexample_rsi_not_starsc, PiecewiseRsi1d, Spiral};
pub use embed::{embed, Embedded};
pub use family::{
    d0_for, m_for, pack_centers, region_radius, FamilyKind, FamilySpec, HardFamily,
    HardFamilyParams, PackingError,
};
pub use hard::{
    make_qc_instance, make_qcqg_instance, make_reference, make_rsi_instance, HardInstance,
    QcInstance, QcqgInstance, Reference, RsiInstance, QCQG_SMOOTHNESS_RATIO,
};
pub use roots::{qc_root_a, quasar_root_a, rsi_root_a};
pub use simple::{Quadratic, Quartic1d, Shifted1d};
pub use family::{d_threshold, PROPOSAL_CAP};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FunctionError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("numerical error: {0}")]
    Numerical(String),
}

/// Function classes a certificate can claim.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ClassTag {
    Qc,
    Qg,
    Rsi,
    Eb,
    Pl,
    Sqc,
    StarSc,
    Smooth,
}

/// Class parameters an instance is constructed to satisfy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub l: f64,
    pub mu: f64,
    pub tau: f64,
    pub tags: Vec<ClassTag>,
}

/// Set of global minimizers, with closed-form projection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum MinimizerSet {
    Point(Vec<f64>),
    /// `{(z, y) : y free}`; `z` occupies the first `z.len()` coordinates.
    Affine { z: Vec<f64>, dim: usize },
    Interval { lo: f64, hi: f64 },
    Ball { center: Vec<f64>, radius: f64 },
    /// `B(center, radius) × R^{dim − center.len()}`.
    Cylinder { center: Vec<f64>, radius: f64, dim: usize },
}

impl MinimizerSet {
    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        match self {
            MinimizerSet::Point(z) => z.clone(),
            MinimizerSet::Affine { z, .. } => {
                let mut p = x.to_vec();
                p[..z.len()].copy_from_slice(z);
                p
            }
            MinimizerSet::Interval { lo, hi } => vec![x[0].clamp(*lo, *hi)],
            MinimizerSet::Ball { center, radius } => {
                let v = linalg::sub(x, center);
                let n = linalg::norm(&v);
                if n <= *radius {
                    x.to_vec()
                } else {
                    linalg::add(center, &linalg::scale(&v, radius / n))
                }
            }
            MinimizerSet::Cylinder { center, radius, .. } => {
                let k = center.len();
                let head = MinimizerSet::Ball { center: center.clone(), radius: *radius }
                    .project(&x[..k]);
                let mut p = x.to_vec();
                p[..k].copy_from_slice(&head);
                p
            }
        }
    }

    /// A designated minimizer (the projection of the origin).
    pub fn representative(&self, dim: usize) -> Vec<f64> {
        self.project(&vec![0.0; dim])
    }

    pub fn is_convex_interval(&self) -> bool {
        match self {
            MinimizerSet::Interval { lo, hi } => lo <= hi,
            MinimizerSet::Point(z) => z.len() == 1,
            _ => false,
        }
    }
}

/// A sphere `{x : ‖x_A − center‖ = radius}` across which a piecewise formula switches.
#[derive(Debug, Clone, PartialEq)]
pub struct Sphere {
    pub center: Vec<f64>,
    pub radius: f64,
}

/// Where samplers should concentrate points for this instance.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingHint {
    pub anchors: Vec<Vec<f64>>,
    pub radii: Vec<f64>,
    pub container_radius: f64,
}

/// An evaluatable objective. Instances are immutable and thread-safe.
pub trait Objective: Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64]) -> Vec<f64>;
    fn minimizer_set(&self) -> MinimizerSet;
    fn certificate(&self) -> Certificate;

    fn f_star(&self) -> f64 {
        0.0
    }

    fn check_domain(&self, x: &[f64]) -> Result<(), FunctionError> {
        if x.len() != self.dim() {
            return Err(FunctionError::Domain(format!(
                "expected dimension {}, got {}",
                self.dim(),
                x.len()
            )));
        }
        if !linalg::is_finite(x) {
            return Err(FunctionError::Domain("non-finite input".into()));
        }
        Ok(())
    }

    /// Spheres on which the piecewise definition switches branch.
    /// Coordinates beyond a sphere's center length are ignored.
    fn boundaries(&self) -> Vec<Sphere> {
        Vec::new()
    }

    fn sampling_hint(&self) -> SamplingHint {
        let z = self.minimizer_set().representative(self.dim());
        SamplingHint {
            anchors: vec![z],
            radii: vec![0.5, 1.0, 2.0],
            container_radius: 3.0,
        }
    }

    /// Distance from `x` to the nearest branch boundary.
    fn boundary_distance(&self, x: &[f64]) -> f64 {
        self.boundaries()
            .iter()
            .map(|s| {
                let k = s.center.len();
                (linalg::dist(&x[..k], &s.center) - s.radius).abs()
            })
            .fold(f64::INFINITY, f64::min)
    }
}

impl<T: Objective + ?Sized> Objective for Box<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn value(&self, x: &[f64]) -> f64 {
        (**self).value(x)
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        (**self).gradient(x)
    }
    fn minimizer_set(&self) -> MinimizerSet {
        (**self).minimizer_set()
    }
    fn certificate(&self) -> Certificate {
        (**self).certificate()
    }
    fn f_star(&self) -> f64 {
        (**self).f_star()
    }
    fn check_domain(&self, x: &[f64]) -> Result<(), FunctionError> {
        (**self).check_domain(x)
    }
    fn boundaries(&self) -> Vec<Sphere> {
        (**self).boundaries()
    }
    fn sampling_hint(&self) -> SamplingHint {
        (**self).sampling_hint()
    }
}

/// Radial decomposition `(r, u)` of `x − z` with `u` the unit vector (zero at `r = 0`).
pub(crate) fn radial(x: &[f64], z: &[f64]) -> (f64, Vec<f64>) {
    let v = linalg::sub(x, z);
    let r = linalg::norm(&v);
    if r == 0.0 {
        (0.0, vec![0.0; v.len()])
    } else {
        (r, v.into_iter().map(|c| c / r).collect())
    }
}
