use crate::error::{invalid, Result};
use crate::family::OperatorFamily;
use crate::geometry::projector_at;

/// `H(x) = |Pi_{R(x)} y|^2 / 2`.
pub fn correlation_objective(family: &OperatorFamily, y: &[f64], x: &[f64], rank_tol: f64) -> Result<f64> {
    if y.len() != family.num_samples() {
        return invalid("measurement length does not match the grid");
    }
    Ok(projector_at(family, x, rank_tol)?.energy(y))
}

/// Samples of `H` over a set of points.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationField {
    pub points: Vec<Vec<f64>>,
    pub values: Vec<f64>,
    /// `|y|^2 / 2`, the upper bound of `H`.
    pub half_norm_sq: f64,
}

impl CorrelationField {
    /// Index of the largest value (first one on ties).
    pub fn argmax(&self) -> Option<usize> {
        let mut best: Option<usize> = None;
        for (i, &v) in self.values.iter().enumerate() {
            if best.is_none_or(|b| v > self.values[b]) {
                best = Some(i);
            }
        }
        best
    }
}

pub fn correlation_field(
    family: &OperatorFamily,
    y: &[f64],
    points: &[Vec<f64>],
    rank_tol: f64,
) -> Result<CorrelationField> {
    if y.len() != family.num_samples() {
        return invalid("measurement length does not match the grid");
    }
    let values = points
        .iter()
        .map(|x| correlation_objective(family, y, x, rank_tol))
        .collect::<Result<Vec<_>>>()?;
    Ok(CorrelationField {
        points: points.to_vec(),
        values,
        half_norm_sq: 0.5 * y.iter().map(|v| v * v).sum::<f64>(),
    })
}
