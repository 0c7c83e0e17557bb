//! The three piecewise hard instances and their reference functions.

use serde::{Deserialize, Serialize};

use super::roots::{qc_root_a, quasar_root_a, rsi_root_a};
use super::{
    radial, Certificate, ClassTag, FamilyKind, FunctionError, HardFamilyParams, MinimizerSet,
    Objective, SamplingHint, Sphere,
};
use crate::linalg;

/// Smoothness constant of the QC∩QG construction, in units of μ.
pub const QCQG_SMOOTHNESS_RATIO: f64 = 202.0;

const QCQG_SCALE: f64 = 169.0;

fn check_center(z: &[f64], d0: usize, max_norm: f64) -> Result<(), FunctionError> {
    if z.len() != d0 {
        return Err(FunctionError::Domain(format!(
            "center has dimension {}, expected {d0}",
            z.len()
        )));
    }
    if !linalg::is_finite(z) {
        return Err(FunctionError::Domain("center is not finite".into()));
    }
    let n = linalg::norm(z);
    if n > max_norm * (1.0 + 1e-12) {
        return Err(FunctionError::Domain(format!(
            "center norm {n} exceeds {max_norm}"
        )));
    }
    Ok(())
}

fn positive(name: &str, v: f64) -> Result<(), FunctionError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(FunctionError::Domain(format!("{name} must be positive and finite, got {v}")))
    }
}

/// τ-QC, μ-QG and 202μ-smooth instance centered at `z`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QcqgInstance {
    pub mu: f64,
    pub tau: f64,
    pub delta: f64,
    pub a: f64,
    pub z: Vec<f64>,
}

pub fn make_qcqg_instance(
    mu: f64,
    tau: f64,
    delta: f64,
    z: Vec<f64>,
    d0: usize,
) -> Result<QcqgInstance, FunctionError> {
    positive("mu", mu)?;
    positive("Delta", delta)?;
    let a = quasar_root_a(tau)?;
    check_center(&z, d0, 5.0 * delta)?;
    Ok(QcqgInstance { mu, tau, delta, a, z })
}

impl QcqgInstance {
    pub fn l(&self) -> f64 {
        QCQG_SMOOTHNESS_RATIO * self.mu
    }

    fn k(&self) -> f64 {
        QCQG_SCALE * self.mu
    }
}

impl Objective for QcqgInstance {
    fn dim(&self) -> usize {
        self.z.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        let (k, d, a) = (self.k(), self.delta, self.a);
        let (r, _) = radial(x, &self.z);
        if r < d {
            return k * r * r / 2.0;
        }
        if r < (1.0 + a) * d {
            return -k * r * r / 2.0 + 2.0 * k * d * r - k * d * d;
        }
        let plateau = k * (1.0 - a) * d * r + k / 2.0 * d * d * (a * a + 2.0 * a - 1.0);
        let nx = linalg::norm(x);
        if nx < 8.0 * d {
            plateau
        } else {
            k * (nx * nx / 2.0 - 8.0 * d * nx + 32.0 * d * d) + plateau
        }
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let (k, d, a) = (self.k(), self.delta, self.a);
        let (r, u) = radial(x, &self.z);
        if r < d {
            return linalg::scale(&linalg::sub(x, &self.z), k);
        }
        if r < (1.0 + a) * d {
            // −k(x − z − Δu) + kΔu
            return linalg::scale(&u, k * (2.0 * d - r));
        }
        let mut g = linalg::scale(&u, k * (1.0 - a) * d);
        let nx = linalg::norm(x);
        if nx >= 8.0 * d {
            linalg::axpy(k * (1.0 - 8.0 * d / nx), x, &mut g);
        }
        g
    }

    fn minimizer_set(&self) -> MinimizerSet {
        MinimizerSet::Point(self.z.clone())
    }

    fn certificate(&self) -> Certificate {
        Certificate {
            l: self.l(),
            mu: self.mu,
            tau: self.tau,
            tags: vec![ClassTag::Qc, ClassTag::Qg, ClassTag::Smooth],
        }
    }

    fn boundaries(&self) -> Vec<Sphere> {
        let d = self.delta;
        vec![
            Sphere { center: self.z.clone(), radius: d },
            Sphere { center: self.z.clone(), radius: (1.0 + self.a) * d },
            Sphere { center: vec![0.0; self.z.len()], radius: 8.0 * d },
        ]
    }

    fn sampling_hint(&self) -> SamplingHint {
        let d = self.delta;
        SamplingHint {
            anchors: vec![self.z.clone(), vec![0.0; self.z.len()]],
            radii: [0.5, 1.0, 1.5, 1.0 + self.a, 2.0, 3.0, 5.0, 8.0, 12.0]
                .iter()
                .map(|c| c * d)
                .collect(),
            container_radius: 14.0 * d,
        }
    }
}

/// μ-RSI and L-smooth instance centered at `z`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RsiInstance {
    pub l: f64,
    pub mu: f64,
    pub delta: f64,
    pub a: f64,
    pub z: Vec<f64>,
}

pub fn make_rsi_instance(
    l: f64,
    mu: f64,
    delta: f64,
    z: Vec<f64>,
    d0: usize,
) -> Result<RsiInstance, FunctionError> {
    positive("mu", mu)?;
    positive("L", l)?;
    positive("Delta", delta)?;
    if l < mu {
        return Err(FunctionError::Domain(format!("need L >= mu, got L={l}, mu={mu}")));
    }
    let a = rsi_root_a(l / mu)?;
    check_center(&z, d0, 5.0 * delta)?;
    Ok(RsiInstance { l, mu, delta, a, z })
}

impl Objective for RsiInstance {
    fn dim(&self) -> usize {
        self.z.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        let (l, mu, d, a) = (self.l, self.mu, self.delta, self.a);
        let (r, _) = radial(x, &self.z);
        if r < d {
            l * r * r / 2.0
        } else if r < (1.0 + a) * d {
            -l * r * r / 2.0 + 2.0 * l * d * r - l * d * d
        } else {
            l * d * d * (1.0 + 2.0 * a - a * a) / 2.0
                + mu / 2.0 * (r * r - (1.0 + a) * (1.0 + a) * d * d)
        }
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let (l, mu, d, a) = (self.l, self.mu, self.delta, self.a);
        let (r, u) = radial(x, &self.z);
        if r < d {
            linalg::scale(&linalg::sub(x, &self.z), l)
        } else if r < (1.0 + a) * d {
            linalg::scale(&u, l * (2.0 * d - r))
        } else {
            linalg::scale(&linalg::sub(x, &self.z), mu)
        }
    }

    fn minimizer_set(&self) -> MinimizerSet {
        MinimizerSet::Point(self.z.clone())
    }

    fn certificate(&self) -> Certificate {
        Certificate {
            l: self.l,
            mu: self.mu,
            tau: 1.0,
            tags: vec![ClassTag::Rsi, ClassTag::Smooth],
        }
    }

    fn boundaries(&self) -> Vec<Sphere> {
        vec![
            Sphere { center: self.z.clone(), radius: self.delta },
            Sphere { center: self.z.clone(), radius: (1.0 + self.a) * self.delta },
        ]
    }

    fn sampling_hint(&self) -> SamplingHint {
        let d = self.delta;
        SamplingHint {
            anchors: vec![self.z.clone(), vec![0.0; self.z.len()]],
            radii: [0.5, 1.0, 1.0 + self.a / 2.0, 1.0 + self.a, 2.0, 3.0, 5.0, 8.0]
                .iter()
                .map(|c| c * d)
                .collect(),
            container_radius: 10.0 * d,
        }
    }
}

/// τ-QC and L-smooth instance on the ball `B(0, D)` centered at `z`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QcInstance {
    pub l: f64,
    pub tau: f64,
    pub d_cap: f64,
    pub delta: f64,
    pub a: f64,
    pub z: Vec<f64>,
}

pub fn make_qc_instance(
    l: f64,
    tau: f64,
    d_cap: f64,
    delta: f64,
    z: Vec<f64>,
    d0: usize,
) -> Result<QcInstance, FunctionError> {
    positive("L", l)?;
    let a = qc_root_a(tau, d_cap, delta)?;
    check_center(&z, d0, 2.0 * d_cap / 3.0)?;
    Ok(QcInstance { l, tau, d_cap, delta, a, z })
}

impl Objective for QcInstance {
    fn dim(&self) -> usize {
        self.z.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        let (l, d, a, q) = (self.l, self.delta, self.a, self.d_cap / 4.0);
        let (r, _) = radial(x, &self.z);
        if r < d {
            l * r * r / 2.0
        } else if r < q {
            l * d * r - l * d * d / 2.0
        } else if r < q + a * d {
            l * (q * r + d * r - r * r / 2.0) - l * (d * d / 2.0 + q * q / 2.0)
        } else {
            l * (1.0 - a) * d * r + a * l * q * d - (1.0 - a * a) * l * d * d / 2.0
        }
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let (l, d, a, q) = (self.l, self.delta, self.a, self.d_cap / 4.0);
        let (r, u) = radial(x, &self.z);
        if r < d {
            linalg::scale(&linalg::sub(x, &self.z), l)
        } else if r < q {
            linalg::scale(&u, l * d)
        } else if r < q + a * d {
            linalg::scale(&u, l * (d - (r - q)))
        } else {
            linalg::scale(&u, l * (1.0 - a) * d)
        }
    }

    fn minimizer_set(&self) -> MinimizerSet {
        MinimizerSet::Point(self.z.clone())
    }

    fn certificate(&self) -> Certificate {
        Certificate {
            l: self.l,
            mu: 0.0,
            tau: self.tau,
            tags: vec![ClassTag::Qc, ClassTag::Smooth],
        }
    }

    fn boundaries(&self) -> Vec<Sphere> {
        let q = self.d_cap / 4.0;
        vec![
            Sphere { center: self.z.clone(), radius: self.delta },
            Sphere { center: self.z.clone(), radius: q },
            Sphere { center: self.z.clone(), radius: q + self.a * self.delta },
        ]
    }

    fn sampling_hint(&self) -> SamplingHint {
        let (d, big) = (self.delta, self.d_cap);
        SamplingHint {
            anchors: vec![self.z.clone(), vec![0.0; self.z.len()]],
            radii: vec![
                0.5 * d,
                d,
                2.0 * d,
                big / 8.0,
                big / 4.0,
                big / 4.0 + self.a * d,
                5.0 * big / 16.0,
                big / 2.0,
                big,
            ],
            container_radius: big,
        }
    }
}

/// One member of a hard family, before embedding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum HardInstance {
    Qcqg(QcqgInstance),
    Rsi(RsiInstance),
    Qc(QcInstance),
}

impl HardInstance {
    pub fn center(&self) -> &[f64] {
        match self {
            HardInstance::Qcqg(f) => &f.z,
            HardInstance::Rsi(f) => &f.z,
            HardInstance::Qc(f) => &f.z,
        }
    }

    fn inner(&self) -> &dyn Objective {
        match self {
            HardInstance::Qcqg(f) => f,
            HardInstance::Rsi(f) => f,
            HardInstance::Qc(f) => f,
        }
    }
}

impl Objective for HardInstance {
    fn dim(&self) -> usize {
        self.inner().dim()
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.inner().value(x)
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.inner().gradient(x)
    }
    fn minimizer_set(&self) -> MinimizerSet {
        self.inner().minimizer_set()
    }
    fn certificate(&self) -> Certificate {
        self.inner().certificate()
    }
    fn boundaries(&self) -> Vec<Sphere> {
        self.inner().boundaries()
    }
    fn sampling_hint(&self) -> SamplingHint {
        self.inner().sampling_hint()
    }
}

/// Reference function `G` that every family member agrees with far from its center.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reference {
    pub kind: FamilyKind,
    pub mu: f64,
    pub delta: f64,
    pub dim: usize,
}

impl Reference {
    /// Radius of the flat ball around the origin (`∞` for the zero function).
    pub fn flat_radius(&self) -> f64 {
        match self.kind {
            FamilyKind::Qcqg => 8.0 * self.delta,
            FamilyKind::Rsi => 2.0 * self.delta,
            FamilyKind::Qc => f64::INFINITY,
        }
    }
}

pub fn make_reference(params: &HardFamilyParams) -> Result<Reference, FunctionError> {
    params.validate_scalars()?;
    Ok(Reference {
        kind: params.family_kind,
        mu: params.mu,
        delta: params.delta,
        dim: params.d0,
    })
}

impl Objective for Reference {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        let nx = linalg::norm(x);
        let (mu, d) = (self.mu, self.delta);
        match self.kind {
            FamilyKind::Qcqg if nx >= 8.0 * d => {
                QCQG_SCALE * mu * (nx * nx / 2.0 - 8.0 * d * nx + 32.0 * d * d)
            }
            FamilyKind::Rsi if nx >= 2.0 * d => mu * nx * nx / 2.0 - 2.0 * mu * d * d,
            _ => 0.0,
        }
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let nx = linalg::norm(x);
        let (mu, d) = (self.mu, self.delta);
        match self.kind {
            FamilyKind::Qcqg if nx >= 8.0 * d => {
                linalg::scale(x, QCQG_SCALE * mu * (1.0 - 8.0 * d / nx))
            }
            FamilyKind::Rsi if nx >= 2.0 * d => linalg::scale(x, mu),
            _ => vec![0.0; x.len()],
        }
    }

    fn minimizer_set(&self) -> MinimizerSet {
        MinimizerSet::Ball {
            center: vec![0.0; self.dim],
            radius: self.flat_radius(),
        }
    }

    fn certificate(&self) -> Certificate {
        let l = match self.kind {
            FamilyKind::Qcqg => QCQG_SCALE * self.mu,
            FamilyKind::Rsi => self.mu,
            FamilyKind::Qc => 0.0,
        };
        Certificate { l, mu: 0.0, tau: 1.0, tags: vec![] }
    }

    fn boundaries(&self) -> Vec<Sphere> {
        match self.kind {
            FamilyKind::Qc => vec![],
            _ => vec![Sphere { center: vec![0.0; self.dim], radius: self.flat_radius() }],
        }
    }
}
