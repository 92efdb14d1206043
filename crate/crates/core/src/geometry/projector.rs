use nalgebra::{DMatrix, DVector};

use crate::error::Result;
use crate::family::{OperatorFamily, ResponseMatrix};
use crate::linalg::{singular_values, sym_eig_range, thin_svd};

/// Default relative tolerance on singular values when extracting ranges.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// Orthogonal projector onto `ran E(x)`, stored as an orthonormal basis on the
/// rows where `E(x)` is supported.
#[derive(Clone, Debug)]
pub struct Projector {
    pub num_samples: usize,
    pub rows: Vec<usize>,
    /// `rows.len() x r` with orthonormal columns.
    pub basis: DMatrix<f64>,
    /// Retained singular values of `E(x)`, decreasing.
    pub singular_values: Vec<f64>,
    /// Right singular vectors (`I x r`), so that `E = basis * diag(s) * v^T`.
    pub right: DMatrix<f64>,
}

impl Projector {
    pub fn rank(&self) -> usize {
        self.basis.ncols()
    }

    /// Coordinates `U^T y` of the projection in the range basis.
    pub fn coords(&self, y: &[f64]) -> DVector<f64> {
        let local = DVector::from_iterator(self.rows.len(), self.rows.iter().map(|&m| y[m]));
        self.basis.tr_mul(&local)
    }

    /// `|Pi y|^2 / 2`.
    pub fn energy(&self, y: &[f64]) -> f64 {
        0.5 * self.coords(y).norm_squared()
    }

    /// `Pi y` as a length-`M` vector.
    pub fn apply(&self, y: &[f64]) -> Vec<f64> {
        let c = self.coords(y);
        let local = &self.basis * c;
        let mut out = vec![0.0; self.num_samples];
        for (r, &m) in self.rows.iter().enumerate() {
            out[m] = local[r];
        }
        out
    }

    /// `|y - Pi y|^2 / 2`, summed entry by entry to avoid cancellation.
    pub fn residual(&self, y: &[f64]) -> f64 {
        let c = self.coords(y);
        let local = &self.basis * c;
        let mut acc = 0.0;
        let mut next = 0usize;
        for (m, &v) in y.iter().enumerate() {
            if next < self.rows.len() && self.rows[next] == m {
                let d = v - local[next];
                acc += d * d;
                next += 1;
            } else {
                acc += v * v;
            }
        }
        0.5 * acc
    }

    /// Dense `M x M` projector matrix, for tests and small problems.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut u = DMatrix::zeros(self.num_samples, self.rank());
        for (r, &m) in self.rows.iter().enumerate() {
            u.set_row(m, &self.basis.row(r));
        }
        &u * u.transpose()
    }
}

/// Orthonormal basis of `ran E` via a rank-truncated SVD.
pub fn range_basis(e: &ResponseMatrix, rank_tol: f64) -> Projector {
    let svd = thin_svd(&e.values, rank_tol);
    Projector {
        num_samples: e.num_samples,
        rows: e.rows.clone(),
        basis: svd.u,
        singular_values: svd.s,
        right: svd.v,
    }
}

fn into_range_basis(e: ResponseMatrix, rank_tol: f64) -> Projector {
    let svd = thin_svd(&e.values, rank_tol);
    Projector {
        num_samples: e.num_samples,
        rows: e.rows,
        basis: svd.u,
        singular_values: svd.s,
        right: svd.v,
    }
}

/// Projector onto `ran E(x)`.
pub fn projector_at(family: &OperatorFamily, x: &[f64], rank_tol: f64) -> Result<Projector> {
    Ok(into_range_basis(family.response(x)?, rank_tol))
}

/// `U_P^T U_Q` restricted to the rows both bases share.
fn cross(p: &Projector, q: &Projector) -> DMatrix<f64> {
    let mut c = DMatrix::zeros(p.rank(), q.rank());
    let (mut i, mut j) = (0usize, 0usize);
    while i < p.rows.len() && j < q.rows.len() {
        match p.rows[i].cmp(&q.rows[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                for a in 0..p.rank() {
                    let pa = p.basis[(i, a)];
                    if pa == 0.0 {
                        continue;
                    }
                    for b in 0..q.rank() {
                        c[(a, b)] += pa * q.basis[(j, b)];
                    }
                }
                i += 1;
                j += 1;
            }
        }
    }
    c
}

/// `|Pi_P Pi_Q|_{2->2}`, the cosine of the smallest principal angle, in `[0, 1]`.
pub fn principal_angle_norm(p: &Projector, q: &Projector) -> f64 {
    if p.rank() == 0 || q.rank() == 0 {
        return 0.0;
    }
    singular_values(&cross(p, q))
        .first()
        .copied()
        .unwrap_or(0.0)
        .clamp(0.0, 1.0)
}

/// `|Pi_P - Pi_Q|_{2->2}`, the sine of the largest principal angle (1 when
/// the ranks differ). Computed from `(I - Pi_P) U_Q` to keep accuracy for
/// nearby subspaces.
pub fn projector_distance(p: &Projector, q: &Projector) -> f64 {
    if p.rank() != q.rank() {
        return 1.0;
    }
    if p.rank() == 0 {
        return 0.0;
    }
    let c = cross(p, q);
    // Residual R = U_Q - U_P C over the union of rows; accumulate R^T R.
    let r = q.rank();
    let mut rtr = DMatrix::<f64>::zeros(r, r);
    let mut row = vec![0.0; r];
    let (mut i, mut j) = (0usize, 0usize);
    while i < p.rows.len() || j < q.rows.len() {
        let take_p = j >= q.rows.len() || (i < p.rows.len() && p.rows[i] <= q.rows[j]);
        let take_q = i >= p.rows.len() || (j < q.rows.len() && q.rows[j] <= p.rows[i]);
        for b in 0..r {
            let mut v = if take_q { q.basis[(j, b)] } else { 0.0 };
            if take_p {
                for a in 0..p.rank() {
                    v -= p.basis[(i, a)] * c[(a, b)];
                }
            }
            row[b] = v;
        }
        for a in 0..r {
            for b in 0..r {
                rtr[(a, b)] += row[a] * row[b];
            }
        }
        if take_p {
            i += 1;
        }
        if take_q {
            j += 1;
        }
    }
    let (_, hi) = sym_eig_range(&rtr);
    hi.max(0.0).sqrt().min(1.0)
}
