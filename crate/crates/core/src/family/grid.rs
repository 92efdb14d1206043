use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Layout of a regular (tensor) grid. Points are `origin + k * step` with
/// `k[d] < counts[d]`; axis 0 varies fastest in the flat index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularLayout {
    pub origin: Vec<f64>,
    pub step: Vec<f64>,
    pub counts: Vec<usize>,
}

/// Measurement locations `z_1..z_M` in `R^D`.
#[derive(Clone, Debug, PartialEq)]
pub struct SamplingGrid {
    dim: usize,
    points: Vec<f64>,
    regular: Option<RegularLayout>,
}

impl SamplingGrid {
    pub fn regular(origin: Vec<f64>, step: Vec<f64>, counts: Vec<usize>) -> Result<Self> {
        let dim = origin.len();
        if dim == 0 || step.len() != dim || counts.len() != dim {
            return invalid("grid origin, step and counts must share a nonzero dimension");
        }
        if step.iter().any(|&h| !(h.is_finite() && h > 0.0)) {
            return invalid("grid steps must be positive and finite");
        }
        if origin.iter().any(|o| !o.is_finite()) {
            return invalid("grid origin must be finite");
        }
        if counts.contains(&0) {
            return invalid("grid counts must be positive");
        }
        let total: usize = counts.iter().product();
        let mut points = Vec::with_capacity(total * dim);
        let mut idx = vec![0usize; dim];
        for _ in 0..total {
            for d in 0..dim {
                points.push(origin[d] + idx[d] as f64 * step[d]);
            }
            for d in 0..dim {
                idx[d] += 1;
                if idx[d] < counts[d] {
                    break;
                }
                idx[d] = 0;
            }
        }
        Ok(Self {
            dim,
            points,
            regular: Some(RegularLayout { origin, step, counts }),
        })
    }

    /// `z_m = m / M` for `m = 1..=M` on the unit interval.
    pub fn unit_interval(m: usize) -> Result<Self> {
        Self::scaled_interval(1.0, m)
    }

    /// `z_m = length * m / M` for `m = 1..=M`.
    pub fn scaled_interval(length: f64, m: usize) -> Result<Self> {
        if m == 0 {
            return invalid("grid needs at least one point");
        }
        let h = length / m as f64;
        Self::regular(vec![h], vec![h], vec![m])
    }

    /// Arbitrary point cloud; rows of `points` are locations.
    pub fn from_points(dim: usize, points: &[Vec<f64>]) -> Result<Self> {
        if dim == 0 || points.is_empty() {
            return invalid("point grid needs a positive dimension and at least one point");
        }
        let mut flat = Vec::with_capacity(points.len() * dim);
        for p in points {
            if p.len() != dim || p.iter().any(|v| !v.is_finite()) {
                return invalid("grid point has wrong dimension or non-finite coordinate");
            }
            flat.extend_from_slice(p);
        }
        Ok(Self { dim, points: flat, regular: None })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, m: usize) -> &[f64] {
        &self.points[m * self.dim..(m + 1) * self.dim]
    }

    pub fn layout(&self) -> Option<&RegularLayout> {
        self.regular.as_ref()
    }

    /// Cell volume of a regular grid, 1 for point clouds.
    pub fn cell_volume(&self) -> f64 {
        self.regular
            .as_ref()
            .map(|r| r.step.iter().product())
            .unwrap_or(1.0)
    }

    /// Smallest grid step (regular grids) or `None`.
    pub fn min_step(&self) -> Option<f64> {
        self.regular
            .as_ref()
            .map(|r| r.step.iter().copied().fold(f64::INFINITY, f64::min))
    }

    /// Bounding box of the grid points.
    pub fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        let mut lo = vec![f64::INFINITY; self.dim];
        let mut hi = vec![f64::NEG_INFINITY; self.dim];
        for m in 0..self.len() {
            for (d, &v) in self.point(m).iter().enumerate() {
                lo[d] = lo[d].min(v);
                hi[d] = hi[d].max(v);
            }
        }
        (lo, hi)
    }

    /// Indices of grid points inside the box `center +- radius` (all points
    /// when `radius` is `None`), sorted increasingly.
    pub fn rows_near(&self, center: &[f64], radius: Option<f64>) -> Vec<usize> {
        let Some(r) = radius else {
            return (0..self.len()).collect();
        };
        match &self.regular {
            Some(lay) => {
                let mut lo = vec![0usize; self.dim];
                let mut hi = vec![0usize; self.dim];
                for d in 0..self.dim {
                    let a = ((center[d] - r - lay.origin[d]) / lay.step[d]).ceil();
                    let b = ((center[d] + r - lay.origin[d]) / lay.step[d]).floor();
                    let n = lay.counts[d] as f64;
                    if !(b >= 0.0 && a < n) || a > b {
                        return Vec::new();
                    }
                    lo[d] = a.max(0.0) as usize;
                    hi[d] = b.min(n - 1.0) as usize;
                }
                let mut out = Vec::new();
                let mut idx = lo.clone();
                loop {
                    let mut flat = 0usize;
                    for d in (0..self.dim).rev() {
                        flat = flat * lay.counts[d] + idx[d];
                    }
                    out.push(flat);
                    let mut d = 0;
                    loop {
                        if d == self.dim {
                            out.sort_unstable();
                            return out;
                        }
                        idx[d] += 1;
                        if idx[d] <= hi[d] {
                            break;
                        }
                        idx[d] = lo[d];
                        d += 1;
                    }
                }
            }
            None => (0..self.len())
                .filter(|&m| {
                    self.point(m)
                        .iter()
                        .zip(center)
                        .all(|(p, c)| (p - c).abs() <= r)
                })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_interval_points() {
        let g = SamplingGrid::unit_interval(4).unwrap();
        assert_eq!(g.len(), 4);
        assert!((g.point(0)[0] - 0.25).abs() < 1e-15);
        assert!((g.point(3)[0] - 1.0).abs() < 1e-15);
        assert!((g.cell_volume() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn rows_near_matches_brute_force_2d() {
        let g = SamplingGrid::regular(vec![0.0, 1.0], vec![1.0, 0.5], vec![7, 9]).unwrap();
        let c = [2.3, 2.2];
        let fast = g.rows_near(&c, Some(1.6));
        let slow: Vec<usize> = (0..g.len())
            .filter(|&m| g.point(m).iter().zip(&c).all(|(p, q)| (p - q).abs() <= 1.6))
            .collect();
        assert_eq!(fast, slow);
        assert!(g.rows_near(&[100.0, 0.0], Some(1.0)).is_empty());
    }

    #[test]
    fn rejects_bad_layouts() {
        assert!(SamplingGrid::regular(vec![0.0], vec![0.0], vec![3]).is_err());
        assert!(SamplingGrid::regular(vec![0.0], vec![1.0], vec![0]).is_err());
        assert!(SamplingGrid::from_points(1, &[vec![0.0, 1.0]]).is_err());
    }
}
