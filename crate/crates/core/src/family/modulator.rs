use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::grid::SamplingGrid;
use crate::error::{invalid, Result};

/// Modulators are evaluated this many correlation lengths around `x`.
const GP_TRUNCATION: f64 = 9.0;

/// Configuration-level description of modulators `f_k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModulatorSpec {
    Constant { value: f64 },
    /// All monomials of total degree `<= max_degree` in coordinates rescaled
    /// to `[-1, 1]` over the grid bounding box.
    Monomials { max_degree: u32 },
    /// White noise on the grid smoothed by a Gaussian of std `corr_len`.
    SmoothGp { corr_len: f64, seed: u64 },
}

impl ModulatorSpec {
    pub fn build(&self, grid: &SamplingGrid) -> Result<Vec<Modulator>> {
        match self {
            ModulatorSpec::Constant { value } => {
                if !value.is_finite() {
                    return invalid("constant modulator must be finite");
                }
                Ok(vec![Modulator::Constant(*value)])
            }
            ModulatorSpec::Monomials { max_degree } => Ok(Modulator::monomials(grid, *max_degree)),
            ModulatorSpec::SmoothGp { corr_len, seed } => {
                Ok(vec![Modulator::smooth_gp(grid, *corr_len, *seed)?])
            }
        }
    }
}

/// A modulating function `f_k` on the source domain.
#[derive(Clone, Debug, PartialEq)]
pub enum Modulator {
    Constant(f64),
    Monomial {
        powers: Vec<u32>,
        center: Vec<f64>,
        half_width: Vec<f64>,
    },
    /// `f(x) = sum_m c_m exp(-|x - p_m|^2 / (2 l^2))` over the nodes `p_m`.
    SmoothGp {
        grid: SamplingGrid,
        coeffs: Vec<f64>,
        corr_len: f64,
    },
    /// Multilinear interpolation of values on a regular grid.
    Sampled { grid: SamplingGrid, values: Vec<f64> },
}

impl Modulator {
    pub fn monomials(grid: &SamplingGrid, max_degree: u32) -> Vec<Modulator> {
        let dim = grid.dim();
        let (lo, hi) = grid.bounds();
        let center: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| 0.5 * (a + b)).collect();
        let half_width: Vec<f64> = lo
            .iter()
            .zip(&hi)
            .map(|(a, b)| if b > a { 0.5 * (b - a) } else { 1.0 })
            .collect();
        let mut out = Vec::new();
        for total in 0..=max_degree {
            for powers in compositions(total, dim) {
                out.push(Modulator::Monomial {
                    powers,
                    center: center.clone(),
                    half_width: half_width.clone(),
                });
            }
        }
        out
    }

    /// Seeded smooth Gaussian-process-like field with unit pointwise variance
    /// away from the grid edges.
    pub fn smooth_gp(grid: &SamplingGrid, corr_len: f64, seed: u64) -> Result<Modulator> {
        if !(corr_len > 0.0 && corr_len.is_finite()) {
            return invalid("smooth_gp corr_len must be positive");
        }
        let Some(layout) = grid.layout() else {
            return invalid("smooth_gp modulators need a regular grid");
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise: Vec<f64> = (0..grid.len()).map(|_| StandardNormal.sample(&mut rng)).collect();
        // sum_k exp(-(k h)^2 / l^2) per axis is the variance of the smoothed field.
        let mut var = 1.0;
        for &h in &layout.step {
            let kmax = (GP_TRUNCATION * corr_len / h).ceil() as i64;
            var *= (-kmax..=kmax)
                .map(|k| (-((k as f64 * h) / corr_len).powi(2)).exp())
                .sum::<f64>();
        }
        let norm = 1.0 / var.sqrt();
        Ok(Modulator::SmoothGp {
            grid: grid.clone(),
            coeffs: noise.into_iter().map(|v| v * norm).collect(),
            corr_len,
        })
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Modulator::Constant(v) => *v,
            Modulator::Monomial { powers, center, half_width } => powers
                .iter()
                .enumerate()
                .map(|(d, &p)| ((x[d] - center[d]) / half_width[d]).powi(p as i32))
                .product(),
            Modulator::SmoothGp { grid, coeffs, corr_len } => {
                let inv = 0.5 / (corr_len * corr_len);
                grid.rows_near(x, Some(GP_TRUNCATION * corr_len))
                    .into_iter()
                    .map(|m| {
                        let r2: f64 = grid.point(m).iter().zip(x).map(|(p, q)| (p - q).powi(2)).sum();
                        coeffs[m] * (-r2 * inv).exp()
                    })
                    .sum()
            }
            Modulator::Sampled { grid, values } => {
                let lay = grid.layout().expect("sampled modulators use regular grids");
                let spec = super::filter::FilterSpec::Tabulated {
                    origin: lay.origin.clone(),
                    step: lay.step.clone(),
                    counts: lay.counts.clone(),
                    values: values.clone(),
                };
                spec.eval(x)
            }
        }
    }
}

/// All exponent vectors of length `dim` summing to `total`, in lexicographic
/// order with the first axis decreasing (`x` before `y`).
fn compositions(total: u32, dim: usize) -> Vec<Vec<u32>> {
    if dim == 1 {
        return vec![vec![total]];
    }
    let mut out = Vec::new();
    for first in (0..=total).rev() {
        for mut rest in compositions(total - first, dim - 1) {
            let mut v = vec![first];
            v.append(&mut rest);
            out.push(v);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monomials_of_degree_one_in_2d_are_one_x_y() {
        let g = SamplingGrid::regular(vec![0.0, 0.0], vec![1.0, 1.0], vec![11, 11]).unwrap();
        let m = Modulator::monomials(&g, 1);
        assert_eq!(m.len(), 3);
        let p = [10.0, 5.0];
        let vals: Vec<f64> = m.iter().map(|f| f.eval(&p)).collect();
        assert_eq!(vals, vec![1.0, 1.0, 0.0]);
    }

    #[test]
    fn smooth_gp_is_seeded_and_smooth() {
        let g = SamplingGrid::scaled_interval(10.0, 1000).unwrap();
        let a = Modulator::smooth_gp(&g, 0.1, 5).unwrap();
        let b = Modulator::smooth_gp(&g, 0.1, 5).unwrap();
        assert_eq!(a, b);
        let v1 = a.eval(&[5.0]);
        let v2 = a.eval(&[5.001]);
        assert!((v1 - v2).abs() < 0.05);
        // unit variance, checked loosely over the interior
        let vals: Vec<f64> = (100..900).map(|k| a.eval(&[k as f64 * 0.01])).collect();
        let var = vals.iter().map(|v| v * v).sum::<f64>() / vals.len() as f64;
        assert!(var > 0.3 && var < 3.0, "variance {var}");
    }
}
