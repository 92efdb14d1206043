//! Noiseless phase-transition instances for the bilinear problem on the
//! smooth product-convolution family.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Result};
use crate::family::{presets, synthesize_measurement, NoiseSpec, SpikeTrain};
use crate::recover::{
    alternating_min, nuclear_norm_solve, projected_gradient, reduce_bilinear, relative_lambda, spectral_init,
    BilinearProblem, SolverKind, SolverOptions, SolverReport, Truth,
};
use crate::seeds;

/// One random instance: `N` spikes observed separately, each through the
/// same operator with a fresh set of `K` smooth modulators per instance.
#[derive(Clone, Debug)]
pub struct PhaseInstance {
    pub problem: BilinearProblem,
    pub positions: Vec<f64>,
    pub w: Vec<f64>,
    pub gamma: Vec<f64>,
}

/// Positions uniform in `[1, 9]` on `z = 10 m / M`, weights uniform in
/// `[0.5, 1.5]`, operator coefficients standard normal.
pub fn phase_instance(k: usize, n: usize, samples: usize, seed: u64) -> Result<PhaseInstance> {
    if k == 0 || n == 0 {
        return invalid("phase instances need K >= 1 and N >= 1");
    }
    let family = presets::smooth_product_convolution(samples, k, seeds::derive(seed, 0))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seeds::derive(seed, 1));
    let positions: Vec<f64> = (0..n).map(|_| rng.random_range(1.0..9.0)).collect();
    let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..1.5)).collect();
    let gamma: Vec<f64> = (0..family.num_coords()).map(|_| StandardNormal.sample(&mut rng)).collect();
    let mut ys = Vec::with_capacity(n);
    for (&x, &wn) in positions.iter().zip(&w) {
        let spikes = SpikeTrain::single(vec![x], wn)?;
        ys.push(synthesize_measurement(&family, &spikes, &gamma, &NoiseSpec::None)?.y);
    }
    let pts: Vec<Vec<f64>> = positions.iter().map(|&x| vec![x]).collect();
    let refs: Vec<&[f64]> = ys.iter().map(Vec::as_slice).collect();
    let problem = reduce_bilinear(&family, &pts, &refs, crate::geometry::DEFAULT_RANK_TOL)?;
    Ok(PhaseInstance { problem, positions, w, gamma })
}

/// Run the requested solvers on one instance. The nonconvex solvers start
/// from the spectral initialization; the nuclear-norm solver uses
/// `lambda = nuclear_lambda |Lambda^*(c)|`.
pub fn run_solvers(
    inst: &PhaseInstance,
    solvers: &[SolverKind],
    opts: &SolverOptions,
    nuclear_lambda: f64,
) -> Vec<SolverReport> {
    let truth = Some(Truth { w: &inst.w, gamma: &inst.gamma });
    let (w0, g0): (DVector<f64>, DVector<f64>) = spectral_init(&inst.problem);
    solvers
        .iter()
        .map(|s| match s {
            SolverKind::AlternatingMin => alternating_min(&inst.problem, &w0, &g0, opts, truth),
            SolverKind::ProjectedGradient => projected_gradient(&inst.problem, &(&w0 * g0.transpose()), opts, truth),
            SolverKind::NuclearNorm => {
                let lambda = relative_lambda(&inst.problem, nuclear_lambda);
                nuclear_norm_solve(&inst.problem, lambda, opts, truth)
            }
        })
        .collect()
}

/// Seed of trial `t` in cell `(k, n)`.
pub fn cell_seed(seed: u64, k: usize, n: usize, t: usize) -> u64 {
    seeds::derive2(seeds::derive(seed, k as u64), n as u64, t as u64)
}

/// Success counts of one `(K, N)` cell, in the order of `solvers`.
#[allow(clippy::too_many_arguments)]
pub fn run_cell(
    k: usize,
    n: usize,
    trials: usize,
    samples: usize,
    seed: u64,
    solvers: &[SolverKind],
    opts: &SolverOptions,
    nuclear_lambda: f64,
    mut on_trial: impl FnMut(usize, &[SolverReport]) -> Result<()>,
) -> Result<Vec<usize>> {
    let mut wins = vec![0usize; solvers.len()];
    for t in 0..trials {
        let inst = phase_instance(k, n, samples, cell_seed(seed, k, n, t))?;
        let reports = run_solvers(&inst, solvers, opts, nuclear_lambda);
        for (c, r) in wins.iter_mut().zip(&reports) {
            if r.success() == Some(true) {
                *c += 1;
            }
        }
        on_trial(t, &reports)?;
    }
    Ok(wins)
}
