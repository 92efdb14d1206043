use serde::{Deserialize, Serialize};

use super::phi::{PhiModel, PhiProfile};
use super::projector::{projector_at, projector_distance};
use crate::error::{invalid, Result};
use crate::family::OperatorFamily;
use crate::linalg::singular_values;

/// Relative noise level at which the single-spike guarantee stops applying:
/// `2 theta^2 + 4 theta` reaches 1 at `theta = sqrt(6)/2 - 1`.
pub fn critical_theta() -> f64 {
    6f64.sqrt() / 2.0 - 1.0
}

/// Extreme eigenvalues of `E(x)^T E(x)` over a set of probes and a Lipschitz
/// estimate of `x -> Pi_{R(x)}` from consecutive probes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralBounds {
    pub sigma_minus: f64,
    pub sigma_plus: f64,
    /// `sigma_plus / sigma_minus`; infinite (serialized as `null`) when
    /// `sigma_minus = 0`.
    pub kappa: f64,
    pub lipschitz: f64,
    /// Smallest distance between consecutive probes used for `lipschitz`.
    pub probe_step: f64,
}

/// Bounds over `probes`. A probe whose smallest singular value falls below
/// `rank_tol` times its largest counts as `sigma_minus = 0`.
pub fn spectral_bounds(family: &OperatorFamily, probes: &[Vec<f64>], rank_tol: f64) -> Result<SpectralBounds> {
    if probes.is_empty() {
        return invalid("spectral bounds need at least one probe");
    }
    let i = family.num_coords();
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for x in probes {
        let e = family.response(x)?;
        let s = singular_values(&e.values);
        let smax = s.first().copied().unwrap_or(0.0);
        let smin = if s.len() < i { 0.0 } else { *s.last().expect("nonempty") };
        let smin = if smin <= rank_tol * smax { 0.0 } else { smin };
        lo = lo.min(smin * smin);
        hi = hi.max(smax * smax);
    }
    let mut lipschitz = 0.0f64;
    let mut probe_step = f64::INFINITY;
    let mut prev = projector_at(family, &probes[0], rank_tol)?;
    for w in probes.windows(2) {
        let next = projector_at(family, &w[1], rank_tol)?;
        let dx = w[0].iter().zip(&w[1]).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        if dx > 0.0 {
            lipschitz = lipschitz.max(projector_distance(&prev, &next) / dx);
            probe_step = probe_step.min(dx);
        }
        prev = next;
    }
    if !probe_step.is_finite() {
        probe_step = 0.0;
    }
    let kappa = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    Ok(SpectralBounds { sigma_minus: lo, sigma_plus: hi, kappa, lipschitz, probe_step })
}

/// Outcome of the single-spike error bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum LocationBound {
    /// `|x_hat - x| <= value`.
    Within(f64),
    /// `theta` too large or the profile never reaches the required level.
    NoGuarantee,
}

impl LocationBound {
    pub fn value(&self) -> Option<f64> {
        match self {
            LocationBound::Within(v) => Some(*v),
            LocationBound::NoGuarantee => None,
        }
    }
}

/// `phi^{-1}(2 theta^2 + 4 theta)` for `theta < sqrt(6)/2 - 1`.
pub fn location_error_bound(theta: f64, profile: &PhiProfile) -> LocationBound {
    if !(theta >= 0.0) || theta >= critical_theta() {
        return LocationBound::NoGuarantee;
    }
    match profile.quantile_inverse(2.0 * theta * theta + 4.0 * theta) {
        Some(r) => LocationBound::Within(r),
        None => LocationBound::NoGuarantee,
    }
}

/// Minimal separation and error radius for multi-spike localization.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IsolationRadius {
    /// Required separation `2 a (tau (N - 1) c)^{1/b}`.
    pub delta_min: f64,
    /// Uniform bound `18.4 a 2^{1/b} / tau`.
    pub r_bound: f64,
    /// Bound with the rational factor kept,
    /// `(a 2^{1/b} / tau) ((tau^2 + tau) Z + 2 tau) / (1 + (tau^2 - 4 tau - 2) Z + (2 tau - 4) Z)`
    /// with `Z = (N - 1) c`.
    pub r_sharp: f64,
}

pub fn isolation_radius(model: &PhiModel, c: f64, n: usize, tau: f64) -> Result<IsolationRadius> {
    if !(tau >= 5.0) {
        return invalid(format!("isolation radius needs tau >= 5, got {tau}"));
    }
    if n < 2 {
        return invalid("isolation radius needs at least two spikes");
    }
    if !(c > 0.0 && c.is_finite()) {
        return invalid("isolation radius needs c > 0");
    }
    let z = (n - 1) as f64 * c;
    let (a, b) = (model.a, model.b);
    let base = a * 2f64.powf(1.0 / b) / tau;
    let ratio = ((tau * tau + tau) * z + 2.0 * tau) / (1.0 + (tau * tau - 4.0 * tau - 2.0) * z + (2.0 * tau - 4.0) * z);
    Ok(IsolationRadius {
        delta_min: 2.0 * a * (tau * z).powf(1.0 / b),
        r_bound: 18.4 * base,
        r_sharp: base * ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::phi::monotone_majorant;

    #[test]
    fn isolation_example() {
        let m = PhiModel::new(1.0, 1.0).unwrap();
        let r = isolation_radius(&m, 1.0, 2, 5.0).unwrap();
        assert!((r.delta_min - 10.0).abs() < 1e-12);
        assert!((r.r_bound - 7.36).abs() < 1e-12);
        assert!(r.r_sharp <= r.r_bound);
        assert!(isolation_radius(&m, 1.0, 2, 4.0).is_err());
    }

    #[test]
    fn bound_at_critical_theta_is_void() {
        let p = monotone_majorant(&[0.0, 0.5, 1.0], 1.0);
        assert_eq!(location_error_bound(critical_theta(), &p), LocationBound::NoGuarantee);
    }

    #[test]
    fn bound_uses_quadratic_level() {
        // 2 * 0.01 + 0.4 = 0.42
        let raw: Vec<f64> = (0..=100).map(|k| k as f64 / 100.0).collect();
        let p = monotone_majorant(&raw, 1.0);
        let b = location_error_bound(0.1, &p).value().unwrap();
        assert!((b - 42.0).abs() < 1e-9);
    }
}
