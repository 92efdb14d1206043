//! Operator recovery from localized spikes: linear least squares with known
//! weights, and the bilinear (unknown weights) problem with three solvers.

pub mod align;
pub mod bilinear;
pub mod known;
pub mod solvers;

pub use align::{align_scale, injectivity_satisfied, matrix_relative_error, product_convolution_min_spikes, Alignment};
pub use bilinear::{power_iteration, reduce_bilinear, spectral_init, BilinearBlock, BilinearProblem};
pub use known::{relative_error, solve_known_weights, ConditionReport, KnownWeightsEstimate};
pub use solvers::{
    alternating_min, default_lambda, nuclear_norm_solve, nuclear_objective, projected_gradient, relative_lambda, SolverKind,
    SolverOptions, SolverReport, Truth, SUCCESS_TOL,
};
