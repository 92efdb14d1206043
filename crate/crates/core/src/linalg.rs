//! Small dense linear-algebra helpers on top of `nalgebra`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Rank-truncated thin SVD `A = U diag(s) V^T` with singular values sorted in
/// decreasing order. Each column of `U` has its first nonzero coordinate
/// positive (the matching column of `V` is flipped with it).
#[derive(Clone, Debug)]
pub struct ThinSvd {
    pub u: DMatrix<f64>,
    pub s: Vec<f64>,
    pub v: DMatrix<f64>,
    /// Largest singular value before truncation.
    pub s_max: f64,
}

impl ThinSvd {
    pub fn rank(&self) -> usize {
        self.s.len()
    }
}

/// Full list of singular values, sorted in decreasing order.
pub fn singular_values(a: &DMatrix<f64>) -> Vec<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = a.clone().singular_values().iter().copied().collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

pub fn spectral_norm(a: &DMatrix<f64>) -> f64 {
    singular_values(a).first().copied().unwrap_or(0.0)
}

/// Thin SVD keeping singular values above `rel_tol * s_max`.
pub fn thin_svd(a: &DMatrix<f64>, rel_tol: f64) -> ThinSvd {
    let (m, n) = a.shape();
    if m == 0 || n == 0 {
        return ThinSvd {
            u: DMatrix::zeros(m, 0),
            s: Vec::new(),
            v: DMatrix::zeros(n, 0),
            s_max: 0.0,
        };
    }
    if n == 1 {
        let s_max = a.norm();
        if s_max == 0.0 {
            return ThinSvd { u: DMatrix::zeros(m, 0), s: Vec::new(), v: DMatrix::zeros(1, 0), s_max };
        }
        let sign = if first_nonzero_negative(a.iter().copied()) { -1.0 } else { 1.0 };
        return ThinSvd { u: a * (sign / s_max), s: vec![s_max], v: DMatrix::from_element(1, 1, sign), s_max };
    }
    // Tall matrices go through a QR first; the SVD then runs on a small square
    // factor, which is much cheaper for long support windows.
    let (q, r) = if m > 2 * n {
        let qr = a.clone().qr();
        (Some(qr.q()), qr.r())
    } else {
        (None, a.clone())
    };
    let (u_small, sv, v_full) = svd_sorted(&r);
    let s_max = sv.first().copied().unwrap_or(0.0);
    let keep = sv.iter().take_while(|&&x| s_max > 0.0 && x > rel_tol * s_max).count();
    let u_sel = u_small.columns(0, keep).into_owned();
    let mut v = v_full.columns(0, keep).into_owned();
    let s = sv[..keep].to_vec();
    let mut u = match q {
        Some(q) => q * u_sel,
        None => u_sel,
    };
    for c in 0..u.ncols() {
        if first_nonzero_negative(u.column(c).iter().copied()) {
            u.column_mut(c).neg_mut();
            v.column_mut(c).neg_mut();
        }
    }
    ThinSvd { u, s, v, s_max }
}

/// Thin SVD `A = U diag(s) V^T` with `s` decreasing, `U` of size
/// `m x min(m, n)`. One-sided Jacobi on the columns (of `A^T` when `A` is
/// wide). Columns of `U` for zero singular values are zero.
///
/// nalgebra's bidiagonal SVD with vectors can return orthonormal factors that
/// do not reproduce a rank-deficient input (seen at 4e-2 relative on a
/// 60 x 3 rank-two response matrix), so vectors come from here.
pub fn svd_sorted(a: &DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>, DMatrix<f64>) {
    if a.nrows() < a.ncols() {
        let (u, s, v) = svd_sorted(&a.transpose());
        return (v, s, u);
    }
    let (m, n) = a.shape();
    let mut w = a.clone();
    let mut v = DMatrix::identity(n, n);
    for _ in 0..80 {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let alpha = w.column(p).norm_squared();
                let beta = w.column(q).norm_squared();
                let gamma = w.column(p).dot(&w.column(q));
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for mat in [&mut w, &mut v] {
                    for i in 0..mat.nrows() {
                        let (xp, xq) = (mat[(i, p)], mat[(i, q)]);
                        mat[(i, p)] = c * xp - s * xq;
                        mat[(i, q)] = s * xp + c * xq;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let norms: Vec<f64> = (0..n).map(|k| w.column(k).norm()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));
    let mut u = DMatrix::zeros(m, n);
    let mut vs = DMatrix::zeros(n, n);
    let mut s = Vec::with_capacity(n);
    for (c, &k) in order.iter().enumerate() {
        if norms[k] > 0.0 {
            u.set_column(c, &(w.column(k) / norms[k]));
        }
        vs.set_column(c, &v.column(k));
        s.push(norms[k]);
    }
    (u, s, vs)
}

fn first_nonzero_negative(mut it: impl Iterator<Item = f64>) -> bool {
    it.find(|x| x.abs() > 0.0).is_some_and(|x| x < 0.0)
}

/// Flip the sign of `v` so that its first nonzero coordinate is positive.
pub fn canonical_sign(v: &mut DVector<f64>) -> f64 {
    if first_nonzero_negative(v.iter().copied()) {
        v.neg_mut();
        -1.0
    } else {
        1.0
    }
}

/// Minimum-norm solution of the symmetric positive semidefinite system
/// `A x = b`, discarding eigenvalues below `rel_tol * lambda_max`.
pub fn psd_pinv_solve(a: &DMatrix<f64>, b: &DVector<f64>, rel_tol: f64) -> DVector<f64> {
    let eig = SymmetricEigen::new(a.clone());
    let lmax = eig.eigenvalues.iter().fold(0.0f64, |m, &l| m.max(l));
    let mut x = DVector::zeros(a.ncols());
    if lmax <= 0.0 {
        return x;
    }
    for (k, &l) in eig.eigenvalues.iter().enumerate() {
        if l > rel_tol * lmax {
            let q = eig.eigenvectors.column(k);
            x += q * (q.dot(b) / l);
        }
    }
    x
}

/// Extreme eigenvalues of a symmetric matrix.
pub fn sym_eig_range(a: &DMatrix<f64>) -> (f64, f64) {
    let eig = SymmetricEigen::new(a.clone());
    let lo = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = eig.eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

/// Singular value thresholding: shrink every singular value by `thr`.
pub fn svt(m: &DMatrix<f64>, thr: f64) -> DMatrix<f64> {
    let (u, sv, v) = svd_sorted(m);
    let mut out = DMatrix::zeros(m.nrows(), m.ncols());
    for (i, &s) in sv.iter().enumerate() {
        let shrunk = s - thr;
        if shrunk > 0.0 {
            out += u.column(i) * v.column(i).transpose() * shrunk;
        }
    }
    out
}

/// Leading singular triple `(s, u, v)`. Returns `s = 0` with zero vectors for
/// a zero matrix. `v` follows the first-nonzero-positive sign convention.
pub fn leading_pair(m: &DMatrix<f64>) -> (f64, DVector<f64>, DVector<f64>) {
    let (r, c) = m.shape();
    if r == 0 || c == 0 {
        return (0.0, DVector::zeros(r), DVector::zeros(c));
    }
    let (u, sv, v) = svd_sorted(m);
    let s = sv[0];
    if s <= 0.0 {
        return (0.0, DVector::zeros(r), DVector::zeros(c));
    }
    let mut uu: DVector<f64> = u.column(0).into_owned();
    let mut vv: DVector<f64> = v.column(0).into_owned();
    if canonical_sign(&mut vv) < 0.0 {
        uu.neg_mut();
    }
    (s, uu, vv)
}

/// Best rank-one approximation in Frobenius (and spectral) norm.
pub fn rank_one(m: &DMatrix<f64>) -> DMatrix<f64> {
    let (s, u, v) = leading_pair(m);
    &u * v.transpose() * s
}
