use serde::{Deserialize, Serialize};

use super::projector::{principal_angle_norm, projector_at};
use crate::error::{invalid, Result};
use crate::family::OperatorFamily;

/// Which monotone envelope of the raw profile is stored in
/// [`PhiProfile::values`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Envelope {
    /// Smallest nondecreasing sequence lying above the raw samples
    /// (solution of the isotonic problem with `phi >= phi_raw`).
    Majorant,
    /// Largest nondecreasing sequence lying below the raw samples, so that
    /// `1 - phi` still bounds `|Pi Pi'|` at every sample.
    Minorant,
}

/// Decorrelation profile sampled at distances `k * step`, `k = 0..K`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhiProfile {
    pub step: f64,
    pub raw: Vec<f64>,
    pub values: Vec<f64>,
    pub envelope: Envelope,
}

/// `phi_raw(k) = 1 - |Pi_{R(x0)} Pi_{R(x0 + k step u)}|`, minimized over the
/// axis directions `u = +-e_d`.
pub fn sample_phi_profile(
    family: &OperatorFamily,
    reference: &[f64],
    step: f64,
    k_max: usize,
    rank_tol: f64,
) -> Result<Vec<f64>> {
    if !(step > 0.0 && step.is_finite()) {
        return invalid("profile step must be positive");
    }
    if k_max == 0 {
        return invalid("profile needs at least two samples");
    }
    let p0 = projector_at(family, reference, rank_tol)?;
    let mut raw = Vec::with_capacity(k_max + 1);
    for k in 0..=k_max {
        let mut worst = f64::INFINITY;
        for d in 0..family.dim() {
            for sign in [1.0, -1.0] {
                let mut x = reference.to_vec();
                x[d] += sign * k as f64 * step;
                let pk = projector_at(family, &x, rank_tol)?;
                worst = worst.min(1.0 - principal_angle_norm(&p0, &pk));
            }
        }
        raw.push(worst);
    }
    Ok(raw)
}

/// Isotonic majorant: first sample clamped to 0, then running maximum.
pub fn monotone_majorant(raw: &[f64], step: f64) -> PhiProfile {
    let mut values = Vec::with_capacity(raw.len());
    let mut run = 0.0f64;
    for (k, &v) in raw.iter().enumerate() {
        if k > 0 {
            run = run.max(v);
        }
        values.push(run);
    }
    PhiProfile { step, raw: raw.to_vec(), values, envelope: Envelope::Majorant }
}

/// Isotonic minorant: reverse running minimum, anchored at 0 and clipped at 0.
pub fn monotone_minorant(raw: &[f64], step: f64) -> PhiProfile {
    let mut values = vec![0.0; raw.len()];
    let mut run = f64::INFINITY;
    for k in (1..raw.len()).rev() {
        run = run.min(raw[k]);
        values[k] = run.max(0.0);
    }
    PhiProfile { step, raw: raw.to_vec(), values, envelope: Envelope::Minorant }
}

impl PhiProfile {
    pub fn distance(&self, k: usize) -> f64 {
        k as f64 * self.step
    }

    /// `inf{s : phi(s) >= t}` for the piecewise-linear interpolant of the
    /// samples. `None` when `t` exceeds the largest sampled value.
    pub fn quantile_inverse(&self, t: f64) -> Option<f64> {
        if t <= 0.0 {
            return Some(0.0);
        }
        let k = self.values.iter().position(|&v| v >= t)?;
        if k == 0 {
            return Some(0.0);
        }
        let (lo, hi) = (self.values[k - 1], self.values[k]);
        let frac = if hi > lo { (t - lo) / (hi - lo) } else { 1.0 };
        Some(self.step * ((k - 1) as f64 + frac))
    }

    /// Evaluate the interpolated profile at distance `s` (constant beyond the
    /// last sample).
    pub fn eval(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return self.values[0];
        }
        let t = s / self.step;
        let k = t.floor() as usize;
        if k + 1 >= self.values.len() {
            return *self.values.last().expect("nonempty profile");
        }
        let f = t - k as f64;
        self.values[k] * (1.0 - f) + self.values[k + 1] * f
    }

    /// Smallest sampled distance at which the profile reaches `level`, used
    /// to pick coarse search steps.
    pub fn reach(&self, level: f64) -> Option<f64> {
        self.quantile_inverse(level)
    }
}

/// Parametric profile `phi(t) = (t/a)^b / (1 + (t/a)^b)` with an optional
/// power-law decay `|Pi Pi'| <= (beta t)^(-alpha)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhiModel {
    pub a: f64,
    pub b: f64,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    /// RMS residual of the logit fit.
    pub residual: f64,
}

impl PhiModel {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
            return invalid("phi model needs a > 0 and b > 0");
        }
        Ok(Self { a, b, alpha: None, beta: None, residual: 0.0 })
    }

    pub fn eval(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let r = (t / self.a).powf(self.b);
        r / (1.0 + r)
    }
}

fn line_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rms = (xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - slope * x - intercept).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    (slope, intercept, rms)
}

/// Least-squares fit of `log(phi / (1 - phi)) = b log t - b log a` over the
/// samples with `phi` in `[0.05, 0.95]`. With `with_decay`, also fits
/// `log |Pi Pi'| = -alpha log t - alpha log beta` over the samples past the
/// midpoint with `|Pi Pi'|` in `[1e-12, 0.5]`.
pub fn fit_phi_model(profile: &PhiProfile, with_decay: bool) -> Result<PhiModel> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (k, &v) in profile.values.iter().enumerate().skip(1) {
        if (0.05..=0.95).contains(&v) {
            xs.push(profile.distance(k).ln());
            ys.push((v / (1.0 - v)).ln());
        }
    }
    let distinct = xs.windows(2).any(|w| w[0] != w[1]);
    if xs.len() < 3 || !distinct {
        return invalid(format!(
            "phi fit needs at least 3 samples with phi in [0.05, 0.95], found {}",
            xs.len()
        ));
    }
    let (slope, intercept, residual) = line_fit(&xs, &ys);
    if !(slope > 0.0) {
        return Err(crate::Error::Numerical(format!("phi fit produced a nonpositive exponent {slope}")));
    }
    let b = slope;
    let a = (-intercept / b).exp();
    let mut model = PhiModel { a, b, alpha: None, beta: None, residual };
    if with_decay {
        let mut dx = Vec::new();
        let mut dy = Vec::new();
        for (k, &v) in profile.values.iter().enumerate().skip(1) {
            let c = 1.0 - v;
            if v >= 0.5 && (1e-12..=0.5).contains(&c) {
                dx.push(profile.distance(k).ln());
                dy.push(c.ln());
            }
        }
        if dx.len() >= 3 && dx.windows(2).any(|w| w[0] != w[1]) {
            let (s, i, _) = line_fit(&dx, &dy);
            let alpha = -s;
            if alpha > 0.0 {
                model.alpha = Some(alpha);
                model.beta = Some((-i / alpha).exp());
            }
        }
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn majorant_example() {
        let p = monotone_majorant(&[0.0, 0.2, 0.1, 0.3], 1.0);
        assert_eq!(p.values, vec![0.0, 0.2, 0.2, 0.3]);
    }

    #[test]
    fn minorant_example() {
        let p = monotone_minorant(&[0.0, 0.2, 0.1, 0.3], 1.0);
        assert_eq!(p.values, vec![0.0, 0.1, 0.1, 0.3]);
    }

    #[test]
    fn quantile_examples() {
        let p = monotone_majorant(&[0.0, 0.1, 0.3, 0.6], 1.0);
        assert_eq!(p.quantile_inverse(0.3), Some(2.0));
        assert_eq!(p.quantile_inverse(0.7), None);
        assert!((p.quantile_inverse(0.2).unwrap() - 1.5).abs() < 1e-15);
        assert_eq!(p.quantile_inverse(0.0), Some(0.0));
    }

    #[test]
    fn fit_recovers_exact_model() {
        let truth = PhiModel::new(1.0, 2.0).unwrap();
        let step = 0.05;
        let raw: Vec<f64> = (0..100).map(|k| truth.eval(k as f64 * step)).collect();
        let p = monotone_majorant(&raw, step);
        let m = fit_phi_model(&p, false).unwrap();
        assert!((m.a - 1.0).abs() < 1e-6 && (m.b - 2.0).abs() < 1e-6, "{m:?}");
    }

    #[test]
    fn fit_needs_three_samples() {
        let p = monotone_majorant(&[0.0, 0.01, 0.5, 0.99], 1.0);
        assert!(fit_phi_model(&p, false).is_err());
    }
}
