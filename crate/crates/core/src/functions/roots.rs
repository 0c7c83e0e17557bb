//! Root parameters `a` that glue the piecewise constructions together.

use super::FunctionError;

fn check_tau(tau: f64) -> Result<(), FunctionError> {
    if tau > 0.0 && tau <= 1.0 {
        Ok(())
    } else {
        Err(FunctionError::Domain(format!("tau must lie in (0, 1], got {tau}")))
    }
}

/// Positive root of `r ↦ 1 − τ/2 − τr − (1 − τ/2)r²`.
pub fn quasar_root_a(tau: f64) -> Result<f64, FunctionError> {
    check_tau(tau)?;
    Ok((-tau + (2.0 * tau * tau - 4.0 * tau + 4.0).sqrt()) / (2.0 - tau))
}

/// `(κ − 1)/(κ + 1)`.
pub fn rsi_root_a(kappa: f64) -> Result<f64, FunctionError> {
    if !(kappa >= 1.0) || !kappa.is_finite() {
        return Err(FunctionError::Domain(format!("kappa must be >= 1, got {kappa}")));
    }
    Ok((kappa - 1.0) / (kappa + 1.0))
}

/// Coefficients `(A, B, C)` of `Q(r) = A r² + B r + C` for the ball construction.
pub(crate) fn qc_quadratic(tau: f64, d: f64, delta: f64) -> (f64, f64, f64) {
    let c = d / (4.0 * delta);
    (tau / 2.0 - 1.0, (1.0 - tau) - c, (1.0 - tau) * c + tau / 2.0)
}

/// Positive root of `Q(r) = (τ/2−1)r² + ((1−τ)−D/(4Δ))r + (1−τ)D/(4Δ) + τ/2`, in `[1−τ, 1]`.
pub fn qc_root_a(tau: f64, d: f64, delta: f64) -> Result<f64, FunctionError> {
    check_tau(tau)?;
    if !(d > 0.0) || !(delta > 0.0) || !(delta <= d / 16.0) {
        return Err(FunctionError::Domain(format!(
            "need D > 0 and 0 < Delta <= D/16, got D={d}, Delta={delta}"
        )));
    }
    let (a2, b, c) = qc_quadratic(tau, d, delta);
    let q = |r: f64| (a2 * r + b) * r + c;
    let (lo, hi) = (1.0 - tau, 1.0);
    if q(lo) < 0.0 || q(hi) > 0.0 {
        return Err(FunctionError::Numerical(format!(
            "no sign change of Q on [{lo}, {hi}]"
        )));
    }
    let disc = b * b - 4.0 * a2 * c;
    let s = -0.5 * (b + b.signum() * disc.sqrt());
    let root = [s / a2, c / s]
        .into_iter()
        .filter(|r| *r >= 0.0)
        .fold(f64::NAN, f64::max);
    // Clamp away rounding at the bracket ends.
    let tol = 1e-12;
    if !(root >= lo - tol && root <= hi + tol) {
        return Err(FunctionError::Numerical(format!(
            "root {root} outside [{lo}, {hi}]"
        )));
    }
    Ok(root.clamp(lo, hi))
}
