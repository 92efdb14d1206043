use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::grid::SamplingGrid;
use super::operator::OperatorFamily;
use crate::error::{invalid, Result};

/// Weighted point sources `sum_n w_n delta_{x_n}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpikeTrain {
    pub positions: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl SpikeTrain {
    pub fn new(positions: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        if positions.len() != weights.len() {
            return invalid("spike positions and weights differ in length");
        }
        if let Some(first) = positions.first() {
            if positions.iter().any(|p| p.len() != first.len()) {
                return invalid("spike positions have mixed dimensions");
            }
        }
        if positions.iter().flatten().chain(&weights).any(|v| !v.is_finite()) {
            return invalid("spike positions and weights must be finite");
        }
        Ok(Self { positions, weights })
    }

    pub fn single(position: Vec<f64>, weight: f64) -> Result<Self> {
        Self::new(vec![position], vec![weight])
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Additive noise model with its seed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseSpec {
    None,
    /// i.i.d. `N(0, sigma^2)` per sample.
    WhiteGaussian { sigma: f64, seed: u64 },
    /// Uniformly random direction scaled to `|b| = theta |y0|` exactly.
    BoundedRelative { theta: f64, seed: u64 },
}

/// Noisy measurement together with its clean part.
#[derive(Clone, Debug, PartialEq)]
pub struct Measurement {
    pub y: Vec<f64>,
    pub clean: Vec<f64>,
}

impl Measurement {
    pub fn noise(&self) -> Vec<f64> {
        self.y.iter().zip(&self.clean).map(|(a, b)| a - b).collect()
    }
}

/// A source measure for [`apply_operator`].
#[derive(Clone, Debug, PartialEq)]
pub enum Source {
    Points(SpikeTrain),
    /// Density sampled on a regular grid, integrated with the cell volume.
    Density { grid: SamplingGrid, values: Vec<f64> },
}

/// `y = H(gamma) u`. Point sources give `sum_n w_n E(x_n) gamma`; densities are
/// integrated by the midpoint rule on their grid.
pub fn apply_operator(family: &OperatorFamily, gamma: &[f64], source: &Source) -> Result<Vec<f64>> {
    if gamma.len() != family.num_coords() {
        return invalid(format!("gamma has {} entries, family has {}", gamma.len(), family.num_coords()));
    }
    let mut y = vec![0.0; family.num_samples()];
    match source {
        Source::Points(spikes) => {
            for (x, &w) in spikes.positions.iter().zip(&spikes.weights) {
                family.response(x)?.apply_add(gamma, w, &mut y);
            }
        }
        Source::Density { grid, values } => {
            if values.len() != grid.len() {
                return invalid("density values do not match their grid");
            }
            if grid.dim() != family.dim() {
                return invalid("density grid dimension does not match the family");
            }
            let vol = grid.cell_volume();
            for (p, &v) in values.iter().enumerate() {
                if v != 0.0 {
                    family.response(grid.point(p))?.apply_add(gamma, v * vol, &mut y);
                }
            }
        }
    }
    Ok(y)
}

/// `y = sum_n w_n E(x_n) gamma + b`.
pub fn synthesize_measurement(
    family: &OperatorFamily,
    spikes: &SpikeTrain,
    gamma: &[f64],
    noise: &NoiseSpec,
) -> Result<Measurement> {
    if spikes.positions.iter().any(|p| p.len() != family.dim()) {
        return invalid("spike dimension does not match the grid");
    }
    let clean = apply_operator(family, gamma, &Source::Points(spikes.clone()))?;
    let b = draw_noise(&clean, noise)?;
    let y = clean.iter().zip(&b).map(|(a, e)| a + e).collect();
    Ok(Measurement { y, clean })
}

/// Noise vector for a clean signal `y0`.
pub fn draw_noise(y0: &[f64], noise: &NoiseSpec) -> Result<Vec<f64>> {
    match *noise {
        NoiseSpec::None => Ok(vec![0.0; y0.len()]),
        NoiseSpec::WhiteGaussian { sigma, seed } => {
            if !(sigma >= 0.0 && sigma.is_finite()) {
                return invalid("noise sigma must be nonnegative");
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            Ok((0..y0.len())
                .map(|_| {
                    let v: f64 = StandardNormal.sample(&mut rng);
                    sigma * v
                })
                .collect())
        }
        NoiseSpec::BoundedRelative { theta, seed } => {
            if !(theta >= 0.0 && theta.is_finite()) {
                return invalid("noise level theta must be nonnegative");
            }
            let norm0 = y0.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm0 == 0.0 {
                return invalid("relative noise is undefined for a zero signal");
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let dir: Vec<f64> = (0..y0.len()).map(|_| StandardNormal.sample(&mut rng)).collect();
            let dn = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
            Ok(dir.into_iter().map(|v| v * theta * norm0 / dn).collect())
        }
    }
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}
