//! Single-spike noise sweeps: localization error and operator error with
//! known weights as functions of the relative noise level.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::family::{norm, synthesize_measurement, NoiseSpec, OperatorFamily, SpikeTrain};
use crate::localize::{localize_single_cached, CoarseCache, Domain, LocalizeOptions};
use crate::recover::solve_known_weights;
use crate::seeds;

/// How a relative level `theta` is turned into noise.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepNoise {
    /// White Gaussian noise with `sigma = theta |y0| / sqrt(M)`.
    White,
    /// Random direction with `|b| = theta |y0|` exactly.
    BoundedRelative,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepParams {
    pub thetas: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub spike_range: [f64; 2],
    pub gamma: Vec<f64>,
    pub coarse_step: f64,
    pub noise: SweepNoise,
    pub with_gamma: bool,
    pub rank_tol: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepTrial {
    pub theta: f64,
    pub trial: usize,
    pub x_true: f64,
    pub x_hat: f64,
    pub error: f64,
    pub error_px: f64,
    pub gamma_error: Option<f64>,
}

/// Order statistics of a sample (quartiles by linear interpolation).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub mean: f64,
}

pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = p * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    let f = pos - lo as f64;
    sorted[lo] * (1.0 - f) + sorted[hi] * f
}

pub fn summarize(values: &[f64]) -> Summary {
    let mut s = values.to_vec();
    s.sort_by(f64::total_cmp);
    Summary {
        min: s[0],
        q1: quantile_sorted(&s, 0.25),
        median: quantile_sorted(&s, 0.5),
        q3: quantile_sorted(&s, 0.75),
        max: s[s.len() - 1],
        mean: s.iter().sum::<f64>() / s.len() as f64,
    }
}

/// Run the sweep on a one-dimensional family. Trial `t` at level index `l`
/// draws its spike position and noise from seeds derived from
/// `(seed, l, t)`; the spike weight is 1.
pub fn run_sweep(family: &OperatorFamily, domain: &Domain, params: &SweepParams) -> Result<Vec<SweepTrial>> {
    if family.dim() != 1 {
        return invalid("noise sweeps run on one-dimensional families");
    }
    if params.trials == 0 || params.thetas.is_empty() {
        return invalid("sweep needs trials and noise levels");
    }
    if params.gamma.len() != family.num_coords() {
        return invalid("sweep gamma does not match the family");
    }
    let pixel = family.grid().min_step().unwrap_or(1.0);
    let opts = LocalizeOptions { rank_tol: params.rank_tol, ..LocalizeOptions::new(params.coarse_step) };
    let cache = CoarseCache::new(family, domain, &opts)?;
    let m = family.num_samples() as f64;
    let mut out = Vec::with_capacity(params.thetas.len() * params.trials);
    for (l, &theta) in params.thetas.iter().enumerate() {
        for t in 0..params.trials {
            let s = seeds::derive2(params.seed, l as u64, t as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            let x_true = rng.random_range(params.spike_range[0]..=params.spike_range[1]);
            let noise_seed = seeds::derive(s, 1);
            let spikes = SpikeTrain::single(vec![x_true], 1.0)?;
            let clean = synthesize_measurement(family, &spikes, &params.gamma, &NoiseSpec::None)?;
            let noise = match params.noise {
                SweepNoise::White => NoiseSpec::WhiteGaussian {
                    sigma: theta * norm(&clean.clean) / m.sqrt(),
                    seed: noise_seed,
                },
                SweepNoise::BoundedRelative => NoiseSpec::BoundedRelative { theta, seed: noise_seed },
            };
            let meas = synthesize_measurement(family, &spikes, &params.gamma, &noise)?;
            let est = localize_single_cached(family, &meas.y, domain, &opts, &cache)?;
            let x_hat = est.position[0];
            let gamma_error = if params.with_gamma {
                let kw = solve_known_weights(family, std::slice::from_ref(&est.position), &[1.0], &[&meas.y])?;
                Some(kw.relative_error(&params.gamma))
            } else {
                None
            };
            let error = (x_hat - x_true).abs();
            out.push(SweepTrial { theta, trial: t, x_true, x_hat, error, error_px: error / pixel, gamma_error });
        }
    }
    Ok(out)
}

/// Trials of one noise level.
pub fn trials_at(trials: &[SweepTrial], theta: f64) -> Vec<&SweepTrial> {
    trials.iter().filter(|t| t.theta == theta).collect()
}
