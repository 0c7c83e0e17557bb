//! Hard families: packed centers, dimensions and the instances built on them.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::hard::{
    make_qc_instance, make_qcqg_instance, make_reference, make_rsi_instance, HardInstance,
    Reference, QCQG_SMOOTHNESS_RATIO,
};
use super::roots::{qc_root_a, quasar_root_a, rsi_root_a};
use super::{Embedded, FunctionError};
use crate::{linalg, seeding};

pub const PROPOSAL_CAP: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyKind {
    Qcqg,
    Rsi,
    Qc,
}

impl std::fmt::Display for FamilyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FamilyKind::Qcqg => "qcqg",
            FamilyKind::Rsi => "rsi",
            FamilyKind::Qc => "qc",
        })
    }
}

fn log_base(b: f64, x: f64) -> f64 {
    x.ln() / b.ln()
}

/// Base dimension `d0`. `kappa` is used by the RSI family only, `tau` by the others.
pub fn d0_for(kind: FamilyKind, tau: f64, kappa: f64) -> usize {
    let v = match kind {
        FamilyKind::Qcqg => log_base(1.25, 4.0 / (tau * tau)),
        FamilyKind::Rsi => log_base(1.25, 4.0 * kappa * kappa),
        FamilyKind::Qc => log_base(16.0 / 15.0, 4.0 / (tau * tau)),
    };
    (v.ceil() as usize).max(1)
}

/// Family size `⌈½ b^{d0}⌉` with `b = 5/4` or `16/15`.
pub fn m_for(kind: FamilyKind, d0: usize) -> usize {
    let b: f64 = match kind {
        FamilyKind::Qc => 16.0 / 15.0,
        _ => 1.25,
    };
    (0.5 * b.powi(d0 as i32)).ceil() as usize
}

/// Smallest ambient dimension the lower bound is stated for.
pub fn d_threshold(kind: FamilyKind, tau: f64, kappa: f64) -> f64 {
    match kind {
        FamilyKind::Qcqg => 3.0 * log_base(1.25, 2.0 / tau),
        FamilyKind::Rsi => 2.0 * log_base(1.25, 2.0 * kappa),
        FamilyKind::Qc => log_base(16.0 / 15.0, 4.0 / (tau * tau)),
    }
}

/// Radius of the identification region around each center.
pub fn region_radius(kind: FamilyKind, delta: f64, d_cap: f64) -> f64 {
    match kind {
        FamilyKind::Qc => 5.0 * d_cap / 16.0,
        _ => 2.0 * delta,
    }
}

fn geometry(kind: FamilyKind, delta: f64, d_cap: f64) -> (f64, f64) {
    match kind {
        FamilyKind::Qc => (2.0 * d_cap / 3.0, 5.0 * d_cap / 8.0),
        _ => (5.0 * delta, 4.0 * delta),
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("greedy packing reached {achieved} of {target} centers within {proposals} proposals")]
pub struct PackingError {
    pub achieved: usize,
    pub target: usize,
    pub proposals: usize,
    pub centers: Vec<Vec<f64>>,
}

/// Greedy rejection packing of `m_target` points in `B(0, container_radius)`
/// with pairwise distances `> exclusion_radius`.
pub fn pack_centers(
    d0: usize,
    container_radius: f64,
    exclusion_radius: f64,
    m_target: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>, PackingError> {
    assert!(exclusion_radius < container_radius, "exclusion must be below container radius");
    assert!(m_target >= 2, "m_target must be at least 2");
    let mut rng = seeding::stream(seed, 0x7061_636b);
    let origin = vec![0.0; d0];
    let mut centers: Vec<Vec<f64>> = Vec::with_capacity(m_target);
    let mut proposals = 0;
    while centers.len() < m_target && proposals < PROPOSAL_CAP {
        proposals += 1;
        let p = if d0 == 1 {
            vec![rng.random_range(-container_radius..=container_radius)]
        } else {
            seeding::uniform_in_ball(&mut rng, &origin, container_radius)
        };
        if centers.iter().all(|c| linalg::dist(c, &p) > exclusion_radius) {
            centers.push(p);
        }
    }
    if centers.len() < m_target {
        return Err(PackingError { achieved: centers.len(), target: m_target, proposals, centers });
    }
    Ok(centers)
}

/// User-facing knobs from which a family is built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilySpec {
    pub kind: FamilyKind,
    pub mu: f64,
    /// Ignored for QCQG, where `L = 202μ`.
    #[serde(default, alias = "L")]
    pub l: Option<f64>,
    #[serde(default = "one")]
    pub tau: f64,
    #[serde(default = "one")]
    pub sigma: f64,
    pub delta: f64,
    /// Domain radius `D` (QC only).
    #[serde(default, alias = "D")]
    pub d_cap: Option<f64>,
    /// Ambient dimension; defaults to the smallest admissible value.
    #[serde(default)]
    pub d: Option<usize>,
    /// Number of centers; defaults to the packing-bound size.
    #[serde(default)]
    pub m: Option<usize>,
    #[serde(default)]
    pub seed: u64,
}

fn one() -> f64 {
    1.0
}

/// Serializable description of a hard family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardFamilyParams {
    pub family_kind: FamilyKind,
    pub l: f64,
    pub mu: f64,
    pub sigma: f64,
    pub tau: f64,
    pub delta: f64,
    pub d_cap: Option<f64>,
    pub d0: usize,
    pub d: usize,
    pub m: usize,
    pub a: f64,
    pub centers: Vec<Vec<f64>>,
}

impl HardFamilyParams {
    pub fn kappa(&self) -> f64 {
        self.l / self.mu
    }

    pub fn region_radius(&self) -> f64 {
        region_radius(self.family_kind, self.delta, self.d_cap.unwrap_or(0.0))
    }

    /// Family size demanded by the packing bound for this `d0`.
    pub fn packing_m(&self) -> usize {
        m_for(self.family_kind, self.d0)
    }

    pub(crate) fn validate_scalars(&self) -> Result<(), FunctionError> {
        let bad = |m: String| Err(FunctionError::Domain(m));
        for (name, v) in [("L", self.l), ("mu", self.mu), ("sigma", self.sigma), ("Delta", self.delta)] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return bad(format!("tau must lie in (0, 1], got {}", self.tau));
        }
        if self.family_kind == FamilyKind::Qc {
            let dc = self.d_cap.unwrap_or(0.0);
            if !(dc > 0.0) || !(self.delta <= dc / 16.0) {
                return bad(format!("QC needs D > 0 and Delta <= D/16, got D={dc}, Delta={}", self.delta));
            }
        }
        Ok(())
    }

    /// Checks every structural invariant. With `require_packing_m`, also checks
    /// `m ≥ ⌈½ b^{d0}⌉`.
    pub fn validate(&self, require_packing_m: bool) -> Result<(), FunctionError> {
        self.validate_scalars()?;
        let bad = |m: String| Err(FunctionError::Domain(m));
        let expected_d0 = d0_for(self.family_kind, self.tau, self.kappa());
        if self.d0 != expected_d0 {
            return bad(format!("d0 = {} but the family formula gives {expected_d0}", self.d0));
        }
        if self.d < self.d0 {
            return bad(format!("d = {} is below d0 = {}", self.d, self.d0));
        }
        if self.family_kind == FamilyKind::Qcqg && self.kappa() < QCQG_SMOOTHNESS_RATIO * (1.0 - 1e-12) {
            return bad(format!("QCQG needs L/mu >= 202, got {}", self.kappa()));
        }
        if self.centers.len() != self.m {
            return bad(format!("{} centers but m = {}", self.centers.len(), self.m));
        }
        if require_packing_m && self.m < self.packing_m() {
            return bad(format!("m = {} is below the packing size {}", self.m, self.packing_m()));
        }
        let (container, exclusion) = geometry(self.family_kind, self.delta, self.d_cap.unwrap_or(0.0));
        for (i, c) in self.centers.iter().enumerate() {
            if c.len() != self.d0 {
                return bad(format!("center {i} has dimension {}", c.len()));
            }
            if linalg::norm(c) > container * (1.0 + 1e-12) {
                return bad(format!("center {i} lies outside the container ball"));
            }
            for (j, c2) in self.centers.iter().enumerate().skip(i + 1) {
                if linalg::dist(c, c2) <= exclusion {
                    return bad(format!("centers {i} and {j} are within {exclusion}"));
                }
            }
        }
        let a = self.expected_a()?;
        if self.a.to_bits() != a.to_bits() {
            return bad(format!("root parameter {} does not match {a}", self.a));
        }
        Ok(())
    }

    fn expected_a(&self) -> Result<f64, FunctionError> {
        match self.family_kind {
            FamilyKind::Qcqg => quasar_root_a(self.tau),
            FamilyKind::Rsi => rsi_root_a(self.kappa()),
            FamilyKind::Qc => qc_root_a(self.tau, self.d_cap.unwrap_or(0.0), self.delta),
        }
    }
}

/// `m` embedded hard instances plus the embedded reference function.
#[derive(Debug, Clone)]
pub struct HardFamily {
    pub params: HardFamilyParams,
    instances: Vec<Embedded<HardInstance>>,
    reference: Embedded<Reference>,
}

impl HardFamily {
    /// Builds a family: derives `d0`, `m`, `a`, then packs centers greedily.
    pub fn build(spec: &FamilySpec) -> Result<HardFamily, FunctionError> {
        let l = match spec.kind {
            FamilyKind::Qcqg => QCQG_SMOOTHNESS_RATIO * spec.mu,
            _ => spec
                .l
                .ok_or_else(|| FunctionError::Domain("L is required for this family".into()))?,
        };
        let kappa = l / spec.mu;
        let d0 = d0_for(spec.kind, spec.tau, kappa);
        let d_min = (d_threshold(spec.kind, spec.tau, kappa).ceil() as usize).max(d0);
        let d = spec.d.unwrap_or(d_min);
        let m = spec.m.unwrap_or_else(|| m_for(spec.kind, d0)).max(2);
        let d_cap = match spec.kind {
            FamilyKind::Qc => spec.d_cap,
            _ => None,
        };
        let mut params = HardFamilyParams {
            family_kind: spec.kind,
            l,
            mu: spec.mu,
            sigma: spec.sigma,
            tau: spec.tau,
            delta: spec.delta,
            d_cap,
            d0,
            d,
            m,
            a: 0.0,
            centers: vec![],
        };
        params.validate_scalars()?;
        params.a = params.expected_a()?;
        let (container, exclusion) = geometry(spec.kind, spec.delta, d_cap.unwrap_or(0.0));
        params.centers = pack_centers(d0, container, exclusion, m, spec.seed)
            .map_err(|e| FunctionError::Numerical(e.to_string()))?;
        HardFamily::from_params(params)
    }

    /// Rebuilds the instances from (possibly deserialized) parameters.
    pub fn from_params(params: HardFamilyParams) -> Result<HardFamily, FunctionError> {
        params.validate(false)?;
        let p = &params;
        let instances = p
            .centers
            .iter()
            .map(|z| {
                let f = match p.family_kind {
                    FamilyKind::Qcqg => HardInstance::Qcqg(make_qcqg_instance(p.mu, p.tau, p.delta, z.clone(), p.d0)?),
                    FamilyKind::Rsi => HardInstance::Rsi(make_rsi_instance(p.l, p.mu, p.delta, z.clone(), p.d0)?),
                    FamilyKind::Qc => HardInstance::Qc(make_qc_instance(
                        p.l,
                        p.tau,
                        p.d_cap.unwrap_or(0.0),
                        p.delta,
                        z.clone(),
                        p.d0,
                    )?),
                };
                super::embed(f, p.d)
            })
            .collect::<Result<Vec<_>, _>>()?;
        let reference = Embedded::lift(make_reference(p)?, p.d)?;
        Ok(HardFamily { params, instances, reference })
    }

    pub fn m(&self) -> usize {
        self.instances.len()
    }

    pub fn instance(&self, i: usize) -> &Embedded<HardInstance> {
        &self.instances[i]
    }

    pub fn instances(&self) -> &[Embedded<HardInstance>] {
        &self.instances
    }

    pub fn reference(&self) -> &Embedded<Reference> {
        &self.reference
    }

    /// `(center, radius)` of every identification region.
    pub fn regions(&self) -> Vec<(Vec<f64>, f64)> {
        let r = self.params.region_radius();
        self.params.centers.iter().map(|c| (c.clone(), r)).collect()
    }

    /// Index of the region containing `x_A`, if any.
    pub fn region_of(&self, x: &[f64]) -> Option<usize> {
        let r = self.params.region_radius();
        let xa = &x[..self.params.d0];
        self.params.centers.iter().position(|c| linalg::dist(c, xa) < r)
    }
}
