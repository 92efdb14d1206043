use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::family::OperatorFamily;
use crate::linalg::{psd_pinv_solve, sym_eig_range};

/// Relative eigenvalue level below which the normal matrix is treated as
/// singular.
pub const SINGULAR_TOL: f64 = 1e-12;

/// Spectrum of the normal matrix `C(X) = sum_n w_n^2 E(x_n)^T E(x_n)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub sigma_minus: f64,
    pub sigma_plus: f64,
    /// Infinite (serialized as `null`) when `C` is singular.
    pub kappa: f64,
    pub singular: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct KnownWeightsEstimate {
    pub gamma: Vec<f64>,
    pub normal_matrix: DMatrix<f64>,
    pub condition: ConditionReport,
    pub warnings: Vec<String>,
}

impl KnownWeightsEstimate {
    pub fn relative_error(&self, truth: &[f64]) -> f64 {
        relative_error(&self.gamma, truth)
    }
}

/// `|a - b| / |b|`.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let num = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let den = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    num / den
}

/// Least-squares operator coordinates from spikes at `positions` with known
/// `weights`: minimizes `sum_n |w_n E(x_n) gamma - y_n|^2`. The
/// `measurements` slice holds one `y_n` per spike (the same image may be
/// repeated). Singular normal matrices fall back to the minimum-norm solution
/// with a warning.
pub fn solve_known_weights(
    family: &OperatorFamily,
    positions: &[Vec<f64>],
    weights: &[f64],
    measurements: &[&[f64]],
) -> Result<KnownWeightsEstimate> {
    let n = positions.len();
    if n == 0 {
        return invalid("known-weights recovery needs at least one spike");
    }
    if weights.len() != n || measurements.len() != n {
        return invalid("positions, weights and measurements differ in length");
    }
    let i = family.num_coords();
    let mut c = DMatrix::zeros(i, i);
    let mut rhs = DVector::zeros(i);
    for ((x, &w), y) in positions.iter().zip(weights).zip(measurements) {
        if y.len() != family.num_samples() {
            return invalid("measurement length does not match the grid");
        }
        let e = family.response(x)?;
        c += e.gram() * (w * w);
        rhs += e.adjoint(y) * w;
    }
    let (lo, hi) = sym_eig_range(&c);
    let singular = !(lo > SINGULAR_TOL * hi);
    let mut warnings = Vec::new();
    let gamma = if singular {
        warnings.push(format!("normal matrix is singular (eigenvalues in [{lo:.3e}, {hi:.3e}]); minimum-norm solution"));
        psd_pinv_solve(&c, &rhs, SINGULAR_TOL)
    } else {
        match c.clone().cholesky() {
            Some(ch) => ch.solve(&rhs),
            None => {
                warnings.push("cholesky failed; minimum-norm solution".to_string());
                psd_pinv_solve(&c, &rhs, SINGULAR_TOL)
            }
        }
    };
    let sigma_minus = if singular { 0.0 } else { lo };
    Ok(KnownWeightsEstimate {
        gamma: gamma.iter().copied().collect(),
        condition: ConditionReport {
            sigma_minus,
            sigma_plus: hi.max(0.0),
            kappa: if singular { f64::INFINITY } else { hi / lo },
            singular,
        },
        normal_matrix: c,
        warnings,
    })
}
