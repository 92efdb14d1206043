use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::optimize::golden_section;

/// Errors of an estimate `(w_hat, gamma_hat)` after fixing the scale
/// ambiguity `(w, gamma) ~ (t w, gamma / t)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Alignment {
    pub scale: f64,
    pub w_error: f64,
    pub gamma_error: f64,
    /// `|w_hat gamma_hat^T - w gamma^T|_F / |w gamma^T|_F`, scale free.
    pub matrix_error: f64,
}

pub fn matrix_relative_error(est: &DMatrix<f64>, truth: &DMatrix<f64>) -> f64 {
    let den = truth.norm();
    if den == 0.0 {
        return if est.norm() == 0.0 { 0.0 } else { f64::INFINITY };
    }
    (est - truth).norm() / den
}

/// Find `t != 0` minimizing `|t w_hat - w|^2 + |gamma_hat / t - gamma|^2`
/// by golden-section search over `log |t|` for each sign. An identically
/// zero estimate gets unit errors.
pub fn align_scale(w_hat: &DVector<f64>, gamma_hat: &DVector<f64>, w: &DVector<f64>, gamma: &DVector<f64>) -> Alignment {
    let matrix_error = matrix_relative_error(&(w_hat * gamma_hat.transpose()), &(w * gamma.transpose()));
    let (a, c) = (w_hat.norm(), gamma_hat.norm());
    if a == 0.0 || c == 0.0 {
        return Alignment { scale: 0.0, w_error: 1.0, gamma_error: 1.0, matrix_error };
    }
    let cost = |t: f64| (w_hat * t - w).norm_squared() + (gamma_hat / t - gamma).norm_squared();
    // Balanced starting scale: |t w_hat| / |w| ~ |gamma_hat / t| / |gamma|.
    let t0 = ((c * w.norm().max(f64::MIN_POSITIVE)) / (a * gamma.norm().max(f64::MIN_POSITIVE))).sqrt();
    let centre = t0.ln();
    let mut best = (1.0, f64::INFINITY);
    for sign in [1.0, -1.0] {
        let (u, f) = golden_section(|u| cost(sign * u.exp()), centre - 30.0, centre + 30.0, 1e-14, 500);
        if f < best.1 {
            best = (sign * u.exp(), f);
        }
    }
    let t = best.0;
    Alignment {
        scale: t,
        w_error: (w_hat * t - w).norm() / w.norm(),
        gamma_error: (gamma_hat / t - gamma).norm() / gamma.norm(),
        matrix_error,
    }
}

/// Sufficient data count for generic injectivity of the lifted map:
/// `I_hat >= 2 (N + I) - 4`.
pub fn injectivity_satisfied(n: usize, i: usize, i_hat: usize) -> bool {
    i_hat + 4 >= 2 * (n + i)
}

/// Minimal spike count for product-convolution families with `J` filters and
/// `K` modulators: `N >= (2 J K - 4) / (J - 2)`. Undefined for `J <= 2`.
pub fn product_convolution_min_spikes(j: usize, k: usize) -> Option<usize> {
    if j <= 2 {
        return None;
    }
    let num = (2 * j * k).saturating_sub(4);
    Some(num.div_ceil(j - 2))
}
