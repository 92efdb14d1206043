use approx::assert_relative_eq;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use spikeloc::experiments::phase::{phase_instance, run_solvers};
use spikeloc::family::{presets, synthesize_measurement, NoiseSpec, SpikeTrain};
use spikeloc::geometry::DEFAULT_RANK_TOL;
use spikeloc::linalg::{rank_one, svt};
use spikeloc::recover::{
    align_scale, alternating_min, injectivity_satisfied, nuclear_objective, power_iteration, product_convolution_min_spikes,
    projected_gradient, reduce_bilinear, solve_known_weights, BilinearBlock, BilinearProblem, SolverKind, SolverOptions,
    Truth,
};

fn normal_matrix(r: usize, c: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| StandardNormal.sample(rng))
}

fn normal_vector(n: usize, rng: &mut ChaCha8Rng) -> DVector<f64> {
    DVector::from_fn(n, |_, _| StandardNormal.sample(rng))
}

/// Random blocks with `rank` data coordinates each and consistent data
/// `c_n = w_n V_n^T gamma`.
fn random_problem(n: usize, i: usize, rank: usize, seed: u64) -> (BilinearProblem, DVector<f64>, DVector<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = normal_vector(n, &mut rng);
    let gamma = normal_vector(i, &mut rng);
    let blocks = (0..n)
        .map(|k| {
            let v = normal_matrix(i, rank, &mut rng);
            let c = v.tr_mul(&gamma) * w[k];
            BilinearBlock { v, c }
        })
        .collect();
    (BilinearProblem::new(blocks, i).unwrap(), w, gamma)
}

/// Singular values of a 2x2 matrix from its Frobenius norm and determinant.
fn singular_values_2x2(t: &DMatrix<f64>) -> (f64, f64) {
    let f2 = t.norm_squared();
    let det = t[(0, 0)] * t[(1, 1)] - t[(0, 1)] * t[(1, 0)];
    let disc = (f2 * f2 - 4.0 * det * det).max(0.0).sqrt();
    (((f2 + disc) / 2.0).sqrt(), ((f2 - disc) / 2.0).max(0.0).sqrt())
}

#[test]
fn power_iteration_matches_the_dense_spectral_norm() {
    for seed in 0..4 {
        let (p, _, _) = random_problem(6, 5, 3, seed);
        let dense = p.to_dense().singular_values().max();
        let est = power_iteration(&p, 100_000, 1e-15, seed);
        assert_relative_eq!(est, dense, max_relative = 1e-6);
    }
}

#[test]
fn dense_matrix_acts_like_the_lifted_map() {
    let (p, _, _) = random_problem(4, 3, 2, 11);
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let t = normal_matrix(4, 3, &mut rng);
    let flat = DVector::from_iterator(12, t.transpose().iter().copied());
    let dense = p.to_dense() * flat;
    let lifted: Vec<f64> = p.apply(&t).iter().flat_map(|v| v.iter().copied().collect::<Vec<_>>()).collect();
    for (a, b) in dense.iter().zip(&lifted) {
        assert_relative_eq!(a, b, epsilon = 1e-13);
    }
}

#[test]
fn reduced_data_is_explained_by_the_true_pair() {
    let family = presets::smooth_product_convolution(400, 2, 3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let gamma = normal_vector(family.num_coords(), &mut rng);
    let xs = [2.3, 4.9, 7.7];
    let w = [0.8, -1.1, 1.4];
    let ys: Vec<Vec<f64>> = xs
        .iter()
        .zip(&w)
        .map(|(&x, &wn)| {
            let s = SpikeTrain::single(vec![x], wn).unwrap();
            synthesize_measurement(&family, &s, gamma.as_slice(), &NoiseSpec::None).unwrap().y
        })
        .collect();
    let refs: Vec<&[f64]> = ys.iter().map(Vec::as_slice).collect();
    let pts: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x]).collect();
    let p = reduce_bilinear(&family, &pts, &refs, DEFAULT_RANK_TOL).unwrap();
    let t = DVector::from_column_slice(&w) * gamma.transpose();
    // The image lies in the range, so the reduced residual vanishes and the
    // data norm equals the image norm.
    assert!(p.objective(&t) <= 1e-24 * p.data_norm().powi(2));
    let y_norm = ys.iter().map(|y| y.iter().map(|v| v * v).sum::<f64>()).sum::<f64>().sqrt();
    assert_relative_eq!(p.data_norm(), y_norm, max_relative = 1e-12);
    // Each block keeps one coordinate per filter.
    assert!(p.blocks.iter().all(|b| b.c.len() == 3));
}

#[test]
fn known_weights_with_one_spike_and_two_modulators_is_singular() {
    let family = presets::smooth_product_convolution(400, 2, 7).unwrap();
    let gamma = [0.4, -0.2, 1.0, 0.3, 0.9, -0.5];
    let y = synthesize_measurement(&family, &SpikeTrain::single(vec![5.0], 1.0).unwrap(), &gamma, &NoiseSpec::None)
        .unwrap()
        .y;
    let kw = solve_known_weights(&family, &[vec![5.0]], &[1.0], &[&y]).unwrap();
    assert!(kw.condition.singular);
    assert!(kw.condition.kappa.is_infinite());
    assert!(!kw.warnings.is_empty());
    // The minimum-norm solution still reproduces the image.
    let fit = synthesize_measurement(&family, &SpikeTrain::single(vec![5.0], 1.0).unwrap(), &kw.gamma, &NoiseSpec::None)
        .unwrap()
        .y;
    let err = fit.iter().zip(&y).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let ny = y.iter().map(|v| v * v).sum::<f64>().sqrt();
    assert!(err <= 1e-10 * ny);
}

#[test]
fn known_weights_round_trip_with_enough_spikes() {
    let family = presets::smooth_product_convolution(400, 2, 7).unwrap();
    let gamma = [0.4, -0.2, 1.0, 0.3, 0.9, -0.5];
    let xs = [1.7, 3.9, 6.1, 8.2];
    let w = [1.0, 0.6, -0.8, 1.3];
    let ys: Vec<Vec<f64>> = xs
        .iter()
        .zip(&w)
        .map(|(&x, &wn)| {
            synthesize_measurement(&family, &SpikeTrain::single(vec![x], wn).unwrap(), &gamma, &NoiseSpec::None)
                .unwrap()
                .y
        })
        .collect();
    let refs: Vec<&[f64]> = ys.iter().map(Vec::as_slice).collect();
    let pts: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x]).collect();
    let kw = solve_known_weights(&family, &pts, &w, &refs).unwrap();
    assert!(!kw.condition.singular);
    assert!(kw.relative_error(&gamma) < 1e-10);
}

#[test]
fn nuclear_objective_matches_the_closed_form_on_2x2() {
    let blocks = vec![
        BilinearBlock { v: DMatrix::identity(2, 2), c: DVector::from_vec(vec![1.0, 0.0]) },
        BilinearBlock { v: DMatrix::identity(2, 2), c: DVector::from_vec(vec![0.0, 2.0]) },
    ];
    let p = BilinearProblem::new(blocks, 2).unwrap();
    let t = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
    // Residual rows (0, 2) and (3, 2); |T|_* = sqrt(|T|_F^2 + 2 |det T|).
    let want = 0.5 * (4.0 + 9.0 + 4.0) + 0.1 * (30.0f64 + 4.0).sqrt();
    assert_relative_eq!(nuclear_objective(&p, &t, 0.1), want, max_relative = 1e-14);
}

#[test]
fn svt_and_rank_one_match_2x2_singular_values() {
    let t = DMatrix::from_row_slice(2, 2, &[2.0, -1.0, 0.5, 3.0]);
    let (s1, s2) = singular_values_2x2(&t);
    let r1 = rank_one(&t);
    assert_relative_eq!((&t - &r1).norm(), s2, max_relative = 1e-12);
    let (a, b) = singular_values_2x2(&svt(&t, 0.5));
    assert_relative_eq!(a, s1 - 0.5, max_relative = 1e-12);
    assert_relative_eq!(b, s2 - 0.5, max_relative = 1e-12);
    assert!(svt(&t, s1 + 1e-9).norm() == 0.0);
}

#[test]
fn alignment_matches_a_rescaled_estimate() {
    let w = DVector::from_vec(vec![0.7, 1.2, -0.4]);
    let g = DVector::from_vec(vec![1.0, -2.0, 0.5, 0.25]);
    let a = align_scale(&(&w * 2.5), &(&g / 2.5), &w, &g);
    assert_relative_eq!(a.scale, 0.4, max_relative = 1e-8);
    assert!(a.w_error < 1e-8 && a.gamma_error < 1e-8);
    // A wrong direction keeps a positive matrix error whatever the scale.
    let a = align_scale(&DVector::from_vec(vec![1.0, 0.0, 0.0]), &g, &w, &g);
    assert!(a.matrix_error > 0.5);
}

#[test]
fn spike_counts_for_product_convolution() {
    assert_eq!(product_convolution_min_spikes(3, 3), Some(14));
    assert_eq!(product_convolution_min_spikes(3, 2), Some(8));
    assert_eq!(product_convolution_min_spikes(2, 3), None);
    assert!(injectivity_satisfied(8, 6, 24));
    assert!(!injectivity_satisfied(7, 6, 21));
}

#[test]
fn the_truth_is_a_fixed_point() {
    let (p, w, g) = random_problem(8, 4, 2, 21);
    let truth = Some(Truth { w: w.as_slice(), gamma: g.as_slice() });
    let opts = SolverOptions::default();
    let als = alternating_min(&p, &w, &g, &opts, truth);
    assert!(als.converged && als.iterations == 0);
    let pg = projected_gradient(&p, &(&w * g.transpose()), &opts, truth);
    assert!(pg.converged);
    assert!(pg.final_error().unwrap() < 1e-14);
}

#[test]
fn many_spikes_are_recovered_from_the_spectral_start() {
    let inst = phase_instance(2, 40, 1000, 5).unwrap();
    let reports = run_solvers(&inst, &[SolverKind::AlternatingMin], &SolverOptions::default(), 1e-6);
    assert_eq!(reports[0].success(), Some(true), "{:?}", reports[0].final_error());
    assert_eq!(reports[0].rank, 1);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn adjoint_matches_the_lifted_map(seed in 0u64..1000) {
        let (p, _, _) = random_problem(5, 4, 3, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 1);
        let t = normal_matrix(5, 4, &mut rng);
        let r: Vec<DVector<f64>> = (0..5).map(|_| normal_vector(3, &mut rng)).collect();
        let lhs: f64 = p.apply(&t).iter().zip(&r).map(|(a, b)| a.dot(b)).sum();
        let rhs = t.dot(&p.adjoint(&r));
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
    }

    #[test]
    fn alternating_objective_never_increases(seed in 0u64..1000) {
        let (mut p, _, _) = random_problem(6, 4, 2, seed);
        // Perturb the data so the minimum is not zero.
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabc);
        for b in &mut p.blocks {
            b.c += normal_vector(b.c.len(), &mut rng) * 0.3;
        }
        let w0 = normal_vector(6, &mut rng);
        let g0 = normal_vector(4, &mut rng);
        let r = alternating_min(&p, &w0, &g0, &SolverOptions { max_iter: 50, tol: 0.0 }, None);
        for pair in r.objective.windows(2) {
            prop_assert!(pair[1] <= pair[0] * (1.0 + 1e-12) + 1e-15);
        }
    }

    #[test]
    fn rescaling_the_start_keeps_the_alternating_trajectory(seed in 0u64..1000, s in 0.05f64..20.0) {
        let (p, _, _) = random_problem(6, 4, 2, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x77);
        let w0 = normal_vector(6, &mut rng);
        let g0 = normal_vector(4, &mut rng);
        let opts = SolverOptions { max_iter: 20, tol: 0.0 };
        let a = alternating_min(&p, &w0, &g0, &opts, None);
        let b = alternating_min(&p, &(&w0 * s), &(&g0 / s), &opts, None);
        prop_assert_eq!(a.objective.len(), b.objective.len());
        let f0 = a.objective[0];
        for (x, y) in a.objective.iter().zip(&b.objective) {
            prop_assert!((x - y).abs() <= 1e-10 * f0);
        }
        prop_assert!((&a.t - &b.t).norm() <= 1e-8 * a.t.norm().max(1e-12));
    }
}
