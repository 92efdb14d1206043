use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::align::matrix_relative_error;
use super::bilinear::{power_iteration, BilinearProblem};
use crate::linalg::{leading_pair, psd_pinv_solve, rank_one, singular_values, svt};

/// Matrix relative error below which a recovery counts as a success.
pub const SUCCESS_TOL: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub max_iter: usize,
    /// Relative tolerance on the objective decrease and on the residual
    /// (alternating and projected gradient) or on the proximal step (nuclear
    /// norm).
    pub tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { max_iter: 2000, tol: 1e-12 }
    }
}

/// Ground truth used to report errors along the iterations.
#[derive(Clone, Copy, Debug)]
pub struct Truth<'a> {
    pub w: &'a [f64],
    pub gamma: &'a [f64],
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    AlternatingMin,
    ProjectedGradient,
    NuclearNorm,
}

impl SolverKind {
    pub fn name(&self) -> &'static str {
        match self {
            SolverKind::AlternatingMin => "alternating_min",
            SolverKind::ProjectedGradient => "projected_gradient",
            SolverKind::NuclearNorm => "nuclear_norm",
        }
    }

    pub fn all() -> [SolverKind; 3] {
        [SolverKind::AlternatingMin, SolverKind::ProjectedGradient, SolverKind::NuclearNorm]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverReport {
    pub solver: SolverKind,
    pub w: DVector<f64>,
    pub gamma: DVector<f64>,
    /// Final lifted estimate `T` (`N x I`).
    pub t: DMatrix<f64>,
    /// Objective at the start and after each iteration.
    pub objective: Vec<f64>,
    /// Matrix relative error against the truth, when supplied.
    pub rel_error: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Numerical rank of `T` (singular values above `1e-12` relative).
    pub rank: usize,
    pub warnings: Vec<String>,
}

impl SolverReport {
    pub fn final_error(&self) -> Option<f64> {
        self.rel_error.last().copied()
    }

    pub fn success(&self) -> Option<bool> {
        self.final_error().map(|e| e < SUCCESS_TOL)
    }
}

fn outer(w: &DVector<f64>, g: &DVector<f64>) -> DMatrix<f64> {
    w * g.transpose()
}

fn truth_error(t: &DMatrix<f64>, truth: Option<Truth>) -> Option<f64> {
    truth.map(|tr| {
        let w = DVector::from_column_slice(tr.w);
        let g = DVector::from_column_slice(tr.gamma);
        matrix_relative_error(t, &outer(&w, &g))
    })
}

fn numerical_rank(t: &DMatrix<f64>) -> usize {
    let s = singular_values(t);
    let smax = s.first().copied().unwrap_or(0.0);
    s.iter().filter(|&&v| smax > 0.0 && v > 1e-12 * smax).count()
}

/// Stop when the residual is below `tol` relative to the data, or when the
/// objective changes by at most `tol` relative to its previous value.
fn stalled(prev: f64, f: f64, half_c2: f64, tol: f64) -> bool {
    f <= tol * tol * half_c2 || (prev - f).abs() <= tol * prev
}

fn factor(t: &DMatrix<f64>) -> (DVector<f64>, DVector<f64>) {
    let (s, u, v) = leading_pair(t);
    let r = s.sqrt();
    (u * r, v * r)
}

fn finish(
    solver: SolverKind,
    t: DMatrix<f64>,
    w: DVector<f64>,
    gamma: DVector<f64>,
    objective: Vec<f64>,
    rel_error: Vec<f64>,
    converged: bool,
    warnings: Vec<String>,
) -> SolverReport {
    SolverReport {
        solver,
        iterations: objective.len().saturating_sub(1),
        rank: numerical_rank(&t),
        w,
        gamma,
        t,
        objective,
        rel_error,
        converged,
        warnings,
    }
}

/// Alternating least squares on `(w, gamma)`. The `gamma` step solves the
/// normal equations `sum_n w_n^2 V_n V_n^T gamma = sum_n w_n V_n c_n` in the
/// minimum-norm sense; the `w` step is closed form per spike. The objective
/// is nonincreasing.
pub fn alternating_min(
    problem: &BilinearProblem,
    w0: &DVector<f64>,
    gamma0: &DVector<f64>,
    opts: &SolverOptions,
    truth: Option<Truth>,
) -> SolverReport {
    let i = problem.num_coords;
    let half_c2 = 0.5 * problem.data_norm().powi(2);
    let mut w = w0.clone();
    let mut gamma = gamma0.clone();
    let mut warnings = Vec::new();
    let obj = |w: &DVector<f64>, g: &DVector<f64>| problem.objective(&outer(w, g));
    let mut objective = vec![obj(&w, &gamma)];
    let mut rel_error: Vec<f64> = truth_error(&outer(&w, &gamma), truth).into_iter().collect();
    let mut converged = objective[0] <= opts.tol * opts.tol * half_c2;
    let mut it = 0;
    while !converged && it < opts.max_iter {
        it += 1;
        if w.iter().all(|&v| v == 0.0) {
            warnings.push(format!("iteration {it}: all weights are zero; gamma step skipped"));
        } else {
            let mut a = DMatrix::zeros(i, i);
            let mut rhs = DVector::zeros(i);
            for (b, &wn) in problem.blocks.iter().zip(w.iter()) {
                a += &b.v * b.v.transpose() * (wn * wn);
                rhs += &b.v * &b.c * wn;
            }
            gamma = psd_pinv_solve(&a, &rhs, 1e-13);
        }
        for (n, b) in problem.blocks.iter().enumerate() {
            let q = b.v.tr_mul(&gamma);
            let qq = q.norm_squared();
            w[n] = if qq > 0.0 { q.dot(&b.c) / qq } else { 0.0 };
        }
        let f = obj(&w, &gamma);
        let prev = *objective.last().expect("nonempty");
        objective.push(f);
        if let Some(e) = truth_error(&outer(&w, &gamma), truth) {
            rel_error.push(e);
        }
        if stalled(prev, f, half_c2, opts.tol) {
            converged = true;
        }
    }
    let t = outer(&w, &gamma);
    finish(SolverKind::AlternatingMin, t, w, gamma, objective, rel_error, converged, warnings)
}

/// Projected gradient on the rank-one matrices:
/// `T <- P_1(T - tau Lambda^*(Lambda T - c))` with `tau = 0.99 / |Lambda|^2`.
pub fn projected_gradient(
    problem: &BilinearProblem,
    t0: &DMatrix<f64>,
    opts: &SolverOptions,
    truth: Option<Truth>,
) -> SolverReport {
    let half_c2 = 0.5 * problem.data_norm().powi(2);
    let lnorm = power_iteration(problem, 10_000, 1e-14, 0x5eed);
    let mut warnings = Vec::new();
    let mut t = t0.clone();
    let mut objective = vec![problem.objective(&t)];
    let mut rel_error: Vec<f64> = truth_error(&t, truth).into_iter().collect();
    if lnorm == 0.0 {
        warnings.push("operator is zero; nothing to do".to_string());
        let (w, g) = factor(&t);
        return finish(SolverKind::ProjectedGradient, t, w, g, objective, rel_error, true, warnings);
    }
    let tau = 0.99 / (lnorm * lnorm);
    let mut converged = objective[0] <= opts.tol * opts.tol * half_c2;
    let mut it = 0;
    while !converged && it < opts.max_iter {
        it += 1;
        let step = &t - problem.gradient(&t) * tau;
        t = rank_one(&step);
        let f = problem.objective(&t);
        let prev = *objective.last().expect("nonempty");
        objective.push(f);
        if let Some(e) = truth_error(&t, truth) {
            rel_error.push(e);
        }
        if stalled(prev, f, half_c2, opts.tol) {
            converged = true;
        }
    }
    let (w, g) = factor(&t);
    finish(SolverKind::ProjectedGradient, t, w, g, objective, rel_error, converged, warnings)
}

/// Default regularization `1e-3 |Lambda^*(c)|_{2->2}`.
pub fn default_lambda(problem: &BilinearProblem) -> f64 {
    relative_lambda(problem, 1e-3)
}

/// `rel |Lambda^*(c)|_{2->2}`.
pub fn relative_lambda(problem: &BilinearProblem, rel: f64) -> f64 {
    let g = problem.adjoint(&problem.data());
    rel * singular_values(&g).first().copied().unwrap_or(0.0)
}

/// `|Lambda T - c|^2 / 2 + lambda |T|_*`.
pub fn nuclear_objective(problem: &BilinearProblem, t: &DMatrix<f64>, lambda: f64) -> f64 {
    problem.objective(t) + lambda * singular_values(t).iter().sum::<f64>()
}

/// Nuclear-norm regularized least squares by monotone accelerated proximal
/// gradient (singular value thresholding), started from `T = 0`. Stops when
/// the proximal step moves less than `tol` relative to the iterate.
pub fn nuclear_norm_solve(
    problem: &BilinearProblem,
    lambda: f64,
    opts: &SolverOptions,
    truth: Option<Truth>,
) -> SolverReport {
    let n = problem.num_spikes();
    let i = problem.num_coords;
    let lnorm = power_iteration(problem, 10_000, 1e-14, 0x5eed);
    let mut warnings = Vec::new();
    let mut x = DMatrix::zeros(n, i);
    let mut fx = nuclear_objective(problem, &x, lambda);
    let mut objective = vec![fx];
    let mut rel_error: Vec<f64> = truth_error(&x, truth).into_iter().collect();
    if lnorm == 0.0 {
        warnings.push("operator is zero; nothing to do".to_string());
        let (w, g) = factor(&x);
        return finish(SolverKind::NuclearNorm, x, w, g, objective, rel_error, true, warnings);
    }
    let step = 0.99 / (lnorm * lnorm);
    let mut y = x.clone();
    let mut tk = 1.0f64;
    let mut converged = false;
    let mut it = 0;
    while !converged && it < opts.max_iter {
        it += 1;
        let z = svt(&(&y - problem.gradient(&y) * step), step * lambda);
        let fz = nuclear_objective(problem, &z, lambda);
        let moved = (&z - &y).norm();
        let x_prev = x.clone();
        if fz <= fx {
            x = z.clone();
            fx = fz;
        }
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * tk * tk).sqrt());
        y = &x + (&z - &x) * (tk / t_next) + (&x - &x_prev) * ((tk - 1.0) / t_next);
        tk = t_next;
        objective.push(fx);
        if let Some(e) = truth_error(&x, truth) {
            rel_error.push(e);
        }
        if moved <= opts.tol * z.norm().max(f64::MIN_POSITIVE) {
            converged = true;
        }
    }
    let (w, g) = factor(&x);
    finish(SolverKind::NuclearNorm, x, w, g, objective, rel_error, converged, warnings)
}
