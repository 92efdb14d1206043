use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::bounds::LocationBound;
use super::phi::PhiProfile;
use super::projector::{projector_at, Projector};
use crate::error::{invalid, Result};
use crate::family::{norm, OperatorFamily};
use crate::seeds;

/// Monte-Carlo amplitudes of the noise terms of the projected-energy
/// objective around a single spike.
///
/// For noise `b`, `Delta_1(x) = <Pi_x y0, Pi_x b>` and
/// `Delta_2(x) = |Pi_x b|^2 / 2`; `Z_i = sup Delta_i - inf Delta_i` over the
/// evaluation points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeReport {
    pub sigma: f64,
    pub trials: usize,
    pub y0_norm: f64,
    pub z1_mean: f64,
    pub z1_std: f64,
    pub z2_mean: f64,
    pub z2_std: f64,
    pub z1: Vec<f64>,
    pub z2: Vec<f64>,
    /// `2 (Z1 + Z2 + 2 (std1 + std2)) / |y0|^2`.
    pub level: f64,
    /// `phi^{-1}(level)`.
    pub bound: LocationBound,
}

/// Projectors for a fixed set of evaluation points, reusable across trials.
pub struct ProjectorSet {
    pub points: Vec<Vec<f64>>,
    pub projectors: Vec<Projector>,
}

impl ProjectorSet {
    pub fn new(family: &OperatorFamily, points: &[Vec<f64>], rank_tol: f64) -> Result<Self> {
        let projectors = points
            .iter()
            .map(|x| projector_at(family, x, rank_tol))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { points: points.to_vec(), projectors })
    }
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = if v.len() > 1 {
        v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (m, var.sqrt())
}

/// Run `trials` white-noise draws of level `sigma`. Trial `t` uses the noise
/// `sigma * xi_t` with `xi_t` seeded from `(seed, t)`, so runs at different
/// `sigma` share their noise directions.
#[allow(clippy::too_many_arguments)]
pub fn mc_amplitude(
    family: &OperatorFamily,
    x_bar: &[f64],
    gamma: &[f64],
    sigma: f64,
    eval: &ProjectorSet,
    trials: usize,
    seed: u64,
    profile: &PhiProfile,
) -> Result<AmplitudeReport> {
    if trials == 0 {
        return invalid("monte-carlo run needs at least one trial");
    }
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return invalid("sigma must be nonnegative");
    }
    if eval.projectors.is_empty() {
        return invalid("monte-carlo run needs evaluation points");
    }
    let y0 = family.response(x_bar)?.apply(gamma);
    let y0_norm = norm(&y0);
    if y0_norm == 0.0 {
        return invalid("clean signal is zero");
    }
    let signal: Vec<_> = eval.projectors.iter().map(|p| p.coords(&y0)).collect();
    let mut z1 = Vec::with_capacity(trials);
    let mut z2 = Vec::with_capacity(trials);
    for t in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(seeds::derive(seed, t as u64));
        let b: Vec<f64> = (0..y0.len())
            .map(|_| {
                let v: f64 = StandardNormal.sample(&mut rng);
                sigma * v
            })
            .collect();
        let (mut lo1, mut hi1, mut lo2, mut hi2) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for (p, s) in eval.projectors.iter().zip(&signal) {
            let cb = p.coords(&b);
            let d1 = s.dot(&cb);
            let d2 = 0.5 * cb.norm_squared();
            lo1 = lo1.min(d1);
            hi1 = hi1.max(d1);
            lo2 = lo2.min(d2);
            hi2 = hi2.max(d2);
        }
        z1.push(hi1 - lo1);
        z2.push(hi2 - lo2);
    }
    let (z1_mean, z1_std) = mean_std(&z1);
    let (z2_mean, z2_std) = mean_std(&z2);
    let level = 2.0 * (z1_mean + z2_mean + 2.0 * (z1_std + z2_std)) / (y0_norm * y0_norm);
    let bound = match profile.quantile_inverse(level) {
        Some(r) => LocationBound::Within(r),
        None => LocationBound::NoGuarantee,
    };
    Ok(AmplitudeReport { sigma, trials, y0_norm, z1_mean, z1_std, z2_mean, z2_std, z1, z2, level, bound })
}
