use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Result};
use crate::family::OperatorFamily;
use crate::geometry::range_basis;
use crate::linalg::leading_pair;

/// One observed spike after reduction: `E(x_n) = U_n V_n^T` with orthonormal
/// `U_n`, and `c_n = U_n^T y_n`.
#[derive(Clone, Debug, PartialEq)]
pub struct BilinearBlock {
    /// `I x r_n`, orthogonal columns (right singular vectors times singular
    /// values).
    pub v: DMatrix<f64>,
    /// `r_n` coordinates of the data.
    pub c: DVector<f64>,
}

/// Reduced bilinear problem: find `w` and `gamma` with
/// `V_n^T gamma w_n ~= c_n` for every spike `n`. Lifted, the unknown is the
/// rank-one matrix `T = w gamma^T` (`N x I`) and the linear map is
/// `Lambda(T)_n = V_n^T T_n`.
#[derive(Clone, Debug, PartialEq)]
pub struct BilinearProblem {
    pub blocks: Vec<BilinearBlock>,
    pub num_coords: usize,
}

impl BilinearProblem {
    pub fn new(blocks: Vec<BilinearBlock>, num_coords: usize) -> Result<Self> {
        if blocks.is_empty() {
            return invalid("bilinear problem needs at least one block");
        }
        if blocks.iter().any(|b| b.v.nrows() != num_coords || b.v.ncols() != b.c.len()) {
            return invalid("bilinear block shapes are inconsistent");
        }
        Ok(Self { blocks, num_coords })
    }

    pub fn num_spikes(&self) -> usize {
        self.blocks.len()
    }

    /// Total number of data coordinates `sum_n r_n`.
    pub fn num_data(&self) -> usize {
        self.blocks.iter().map(|b| b.c.len()).sum()
    }

    pub fn data_norm(&self) -> f64 {
        self.blocks.iter().map(|b| b.c.norm_squared()).sum::<f64>().sqrt()
    }

    /// `Lambda(T)`, one vector per block.
    pub fn apply(&self, t: &DMatrix<f64>) -> Vec<DVector<f64>> {
        self.blocks
            .iter()
            .enumerate()
            .map(|(n, b)| b.v.tr_mul(&t.row(n).transpose()))
            .collect()
    }

    /// `Lambda^*(r)`: row `n` is `(V_n r_n)^T`.
    pub fn adjoint(&self, r: &[DVector<f64>]) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.num_spikes(), self.num_coords);
        for (n, (b, rn)) in self.blocks.iter().zip(r).enumerate() {
            out.set_row(n, &(&b.v * rn).transpose());
        }
        out
    }

    pub fn data(&self) -> Vec<DVector<f64>> {
        self.blocks.iter().map(|b| b.c.clone()).collect()
    }

    /// `Lambda(T) - c`.
    pub fn residual(&self, t: &DMatrix<f64>) -> Vec<DVector<f64>> {
        self.apply(t)
            .into_iter()
            .zip(&self.blocks)
            .map(|(a, b)| a - &b.c)
            .collect()
    }

    /// `|Lambda(T) - c|^2 / 2`.
    pub fn objective(&self, t: &DMatrix<f64>) -> f64 {
        0.5 * self.residual(t).iter().map(|r| r.norm_squared()).sum::<f64>()
    }

    /// Gradient `Lambda^*(Lambda(T) - c)`.
    pub fn gradient(&self, t: &DMatrix<f64>) -> DMatrix<f64> {
        self.adjoint(&self.residual(t))
    }

    /// Dense matrix of `Lambda` acting on `T` flattened row by row
    /// (`n * I + i`).
    pub fn to_dense(&self) -> DMatrix<f64> {
        let i = self.num_coords;
        let mut out = DMatrix::zeros(self.num_data(), self.num_spikes() * i);
        let mut row = 0;
        for (n, b) in self.blocks.iter().enumerate() {
            for k in 0..b.c.len() {
                for j in 0..i {
                    out[(row, n * i + j)] = b.v[(j, k)];
                }
                row += 1;
            }
        }
        out
    }
}

/// Reduce spikes at `positions` (one measurement per spike, images may be
/// repeated) to the bilinear problem in range coordinates.
pub fn reduce_bilinear(
    family: &OperatorFamily,
    positions: &[Vec<f64>],
    measurements: &[&[f64]],
    rank_tol: f64,
) -> Result<BilinearProblem> {
    if positions.len() != measurements.len() {
        return invalid("positions and measurements differ in length");
    }
    let mut blocks = Vec::with_capacity(positions.len());
    for (x, y) in positions.iter().zip(measurements) {
        if y.len() != family.num_samples() {
            return invalid("measurement length does not match the grid");
        }
        let p = range_basis(&family.response(x)?, rank_tol);
        let mut v = p.right.clone();
        for (k, &s) in p.singular_values.iter().enumerate() {
            v.column_mut(k).scale_mut(s);
        }
        blocks.push(BilinearBlock { v, c: p.coords(y) });
    }
    BilinearProblem::new(blocks, family.num_coords())
}

/// `|Lambda|_{2->2}` by power iteration on `Lambda^* Lambda` from a seeded
/// random start; stops when the Rayleigh quotient changes by less than `tol`
/// relatively.
pub fn power_iteration(problem: &BilinearProblem, max_iter: usize, tol: f64, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = DMatrix::from_fn(problem.num_spikes(), problem.num_coords, |_, _| {
        let v: f64 = StandardNormal.sample(&mut rng);
        v
    });
    let mut mu_prev = 0.0;
    for _ in 0..max_iter {
        let nt = t.norm();
        if nt == 0.0 {
            return 0.0;
        }
        t /= nt;
        let a = problem.apply(&t);
        let mu = a.iter().map(|v| v.norm_squared()).sum::<f64>();
        t = problem.adjoint(&a);
        if (mu - mu_prev).abs() <= tol * mu {
            return mu.sqrt();
        }
        mu_prev = mu;
    }
    mu_prev.sqrt()
}

/// Spectral initialization: leading singular pair `(s, u, v)` of
/// `Lambda^*(c)`, scaled so that `|Lambda(w0 gamma0^T)| = |c|` with the sign
/// of `<Lambda(u v^T), c>`, split evenly between `w0` and `gamma0`.
pub fn spectral_init(problem: &BilinearProblem) -> (DVector<f64>, DVector<f64>) {
    let g = problem.adjoint(&problem.data());
    let (s, u, v) = leading_pair(&g);
    let n = problem.num_spikes();
    let i = problem.num_coords;
    if s == 0.0 {
        return (DVector::zeros(n), DVector::zeros(i));
    }
    let uv = &u * v.transpose();
    let t = problem.apply(&uv);
    let tn = t.iter().map(|x| x.norm_squared()).sum::<f64>().sqrt();
    if tn == 0.0 {
        return (DVector::zeros(n), DVector::zeros(i));
    }
    let inner: f64 = t.iter().zip(&problem.blocks).map(|(a, b)| a.dot(&b.c)).sum();
    let sign = if inner < 0.0 { -1.0 } else { 1.0 };
    let scale = problem.data_norm() / tn;
    let root = scale.sqrt();
    (u * (sign * root), v * root)
}
