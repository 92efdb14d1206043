//! Spike localization by maximizing the projected energy
//! `H(x) = |Pi_{R(x)} y|^2 / 2`.

pub mod objective;
pub mod peaks;
pub mod single;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

pub use objective::{correlation_field, correlation_objective, CorrelationField};
pub use peaks::{detect_peaks, DetectOptions};
pub use single::{
    estimate_alpha, localize_single, localize_single_cached, suggest_coarse_step, AlphaEstimate, CoarseCache,
    LocalizeOptions, SpikeEstimate, SpikeStatus,
};

/// Axis-aligned search box.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Domain {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() {
            return invalid("domain bounds must share a nonzero dimension");
        }
        if lower.iter().chain(&upper).any(|v| !v.is_finite()) {
            return invalid("domain bounds must be finite");
        }
        if lower.iter().zip(&upper).any(|(a, b)| a >= b) {
            return invalid("domain is empty");
        }
        Ok(Self { lower, upper })
    }

    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo], vec![hi])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    /// Largest side length.
    pub fn extent(&self) -> f64 {
        self.lower.iter().zip(&self.upper).map(|(a, b)| b - a).fold(0.0, f64::max)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter().zip(self.lower.iter().zip(&self.upper)).all(|(v, (a, b))| *v >= *a && *v <= *b)
    }

    /// Regular lattice `lower + k * step` inside the box, axis 0 fastest.
    pub fn lattice(&self, step: f64) -> Result<Vec<Vec<f64>>> {
        if !(step > 0.0 && step.is_finite()) {
            return invalid("coarse step must be positive");
        }
        if self.lower.iter().zip(&self.upper).any(|(a, b)| step > b - a) {
            return invalid("coarse step is larger than the domain extent");
        }
        let counts: Vec<usize> = self
            .lower
            .iter()
            .zip(&self.upper)
            .map(|(a, b)| ((b - a) / step * (1.0 + 1e-12)).floor() as usize + 1)
            .collect();
        let total: usize = counts.iter().product();
        let mut out = Vec::with_capacity(total);
        let mut idx = vec![0usize; self.dim()];
        for _ in 0..total {
            out.push((0..self.dim()).map(|d| (self.lower[d] + idx[d] as f64 * step).min(self.upper[d])).collect());
            for d in 0..self.dim() {
                idx[d] += 1;
                if idx[d] < counts[d] {
                    break;
                }
                idx[d] = 0;
            }
        }
        Ok(out)
    }
}
