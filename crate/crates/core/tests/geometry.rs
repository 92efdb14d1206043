use approx::assert_relative_eq;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

mod common;

use common::qr_range_basis;
use spikeloc::family::{presets, ResponseMatrix};
use spikeloc::geometry::{
    critical_theta, fit_phi_model, isolation_radius, location_error_bound, mc_amplitude, monotone_majorant,
    monotone_minorant, principal_angle_norm, projector_at, range_basis, sample_phi_profile, spectral_bounds,
    LocationBound, PhiModel, ProjectorSet, DEFAULT_RANK_TOL,
};

fn response(values: DMatrix<f64>) -> ResponseMatrix {
    let n = values.nrows();
    ResponseMatrix { num_samples: n, rows: (0..n).collect(), values }
}

fn random_matrix(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(&mut rng))
}

/// Largest cosine between two column spaces from the dense projectors.
fn dense_cosine(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let qa = qr_range_basis(a, 1e-12);
    let qb = qr_range_basis(b, 1e-12);
    (&qa * qa.transpose() * &qb * qb.transpose()).singular_values().max()
}

#[test]
fn duplicated_direction_has_rank_one() {
    let c = DVector::from_vec(vec![1.0, 2.0, -1.0, 0.5]);
    let e = DMatrix::from_columns(&[c.clone(), c * 2.0]);
    assert_eq!(range_basis(&response(e), DEFAULT_RANK_TOL).rank(), 1);
}

#[test]
fn clipped_hat_response_projects_like_pivoted_qr() {
    // The narrowest hat falls off the grid here and the response has rank 2.
    let family = presets::hats(60).unwrap();
    let x = [0.8950821141114493];
    let p = projector_at(&family, &x, DEFAULT_RANK_TOL).unwrap();
    let q = qr_range_basis(&family.response(&x).unwrap().to_dense(), 1e-12);
    assert_eq!((p.rank(), q.ncols()), (2, 2));
    assert!((p.to_dense() - &q * q.transpose()).abs().max() < 1e-13);
}

#[test]
fn a1_response_has_full_rank() {
    let family = presets::gaussian_narrow(100).unwrap();
    assert_eq!(projector_at(&family, &[0.41], DEFAULT_RANK_TOL).unwrap().rank(), 3);
}

#[test]
fn orthonormal_basis_of_the_range() {
    let e = random_matrix(12, 4, 1);
    let p = range_basis(&response(e.clone()), DEFAULT_RANK_TOL);
    assert!((p.basis.transpose() * &p.basis - DMatrix::identity(4, 4)).abs().max() < 1e-12);
    let dense = p.to_dense();
    assert!((&dense * &e - &e).abs().max() < 1e-12);
}

#[test]
fn same_and_orthogonal_ranges() {
    let mut a = DMatrix::zeros(6, 2);
    a[(0, 0)] = 1.0;
    a[(1, 1)] = 1.0;
    let mut b = DMatrix::zeros(6, 2);
    b[(3, 0)] = 1.0;
    b[(5, 1)] = 2.0;
    let pa = range_basis(&response(a), DEFAULT_RANK_TOL);
    let pb = range_basis(&response(b), DEFAULT_RANK_TOL);
    assert_relative_eq!(principal_angle_norm(&pa, &pa), 1.0, epsilon = 1e-15);
    assert!(principal_angle_norm(&pa, &pb) < 1e-15);
}

#[test]
fn sinc_profile_vanishes_at_one_scale() {
    let family = presets::sinc(1.0, 1.0, 20_000).unwrap();
    let raw = sample_phi_profile(&family, &[0.0], 1.0, 1, DEFAULT_RANK_TOL).unwrap();
    assert_eq!(raw[0], 0.0);
    assert_relative_eq!(raw[1], 1.0, epsilon = 1e-12);
}

#[test]
fn sinc_profile_decay_and_curvature() {
    let a = 1.0;
    let family = presets::sinc(a, 1.0, 20_000).unwrap();
    let h = 0.05;
    let raw = sample_phi_profile(&family, &[0.0], h, 80, DEFAULT_RANK_TOL).unwrap();
    for (k, &v) in raw.iter().enumerate().skip(1) {
        let d = k as f64 * h;
        if d > a {
            assert!(v >= 1.0 - a / d - 1e-6, "decay at {d}: {v}");
        }
        if d < 0.5 * a {
            let cap = std::f64::consts::PI.powi(2) * d * d / (3.0 * a * a);
            assert!(v <= cap + 1e-6, "curvature at {d}: {v} > {cap}");
        }
    }
}

#[test]
fn a1_profile_is_nonnegative_and_approaches_one() {
    let family = presets::gaussian_narrow(100).unwrap();
    let raw = sample_phi_profile(&family, &[0.5], 0.005, 60, DEFAULT_RANK_TOL).unwrap();
    assert!(raw.iter().all(|&v| v >= -1e-12));
    assert!(raw[60] > 0.99);
}

#[test]
fn orthogonalized_convolution_is_well_conditioned() {
    let family = presets::gaussian_narrow(200).unwrap();
    let probes: Vec<Vec<f64>> = (0..11).map(|k| vec![0.3 + 0.04 * k as f64]).collect();
    let b = spectral_bounds(&family, &probes, DEFAULT_RANK_TOL).unwrap();
    assert!((b.sigma_minus - 1.0).abs() < 1e-6 && (b.sigma_plus - 1.0).abs() < 1e-6);
    assert!(b.kappa >= 1.0);
}

#[test]
fn product_convolution_is_never_injective() {
    let family = presets::smooth_product_convolution(400, 2, 7).unwrap();
    let probes = vec![vec![3.0], vec![3.1], vec![6.2]];
    let b = spectral_bounds(&family, &probes, DEFAULT_RANK_TOL).unwrap();
    assert_eq!(b.sigma_minus, 0.0);
    assert!(b.kappa.is_infinite());
}

#[test]
fn sinc_lipschitz_constant_is_below_the_analytic_value() {
    let a = 1.0;
    let family = presets::sinc(a, 1.0, 20_000).unwrap();
    let probes: Vec<Vec<f64>> = (0..21).map(|k| vec![0.01 * k as f64]).collect();
    let b = spectral_bounds(&family, &probes, DEFAULT_RANK_TOL).unwrap();
    let cap = std::f64::consts::PI / (3f64.sqrt() * a);
    assert!(b.lipschitz <= cap * (1.0 + 1e-3), "{} > {cap}", b.lipschitz);
    assert!(b.lipschitz > 0.5 * cap);
}

#[test]
fn location_bound_examples() {
    let profile = monotone_majorant(&(0..=100).map(|k| k as f64 / 100.0).collect::<Vec<_>>(), 1.0);
    assert_eq!(location_error_bound(0.0, &profile), LocationBound::Within(0.0));
    let LocationBound::Within(r) = location_error_bound(0.1, &profile) else { panic!() };
    assert_relative_eq!(r, 42.0, epsilon = 1e-9);
    assert_eq!(location_error_bound(critical_theta(), &profile), LocationBound::NoGuarantee);
    let t = critical_theta();
    assert_relative_eq!(2.0 * t * t + 4.0 * t, 1.0, epsilon = 1e-14);
}

#[test]
fn isolation_radius_examples() {
    let m = PhiModel::new(1.0, 1.0).unwrap();
    let r = isolation_radius(&m, 1.0, 2, 5.0).unwrap();
    assert_relative_eq!(r.delta_min, 10.0, epsilon = 1e-12);
    assert_relative_eq!(r.r_bound, 7.36, epsilon = 1e-12);
    let sharp = isolation_radius(&PhiModel::new(2.0, 1e9).unwrap(), 1.0, 2, 10.0).unwrap();
    assert_relative_eq!(sharp.r_bound, 18.4 * 2.0 / 10.0, max_relative = 1e-8);
    assert!(isolation_radius(&m, 1.0, 2, 4.0).is_err());
}

#[test]
fn phi_model_fit_tolerates_small_noise() {
    let truth = PhiModel::new(0.7, 2.5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let h = 0.02;
    let raw: Vec<f64> = (0..200)
        .map(|k| {
            let e: f64 = StandardNormal.sample(&mut rng);
            truth.eval(k as f64 * h) * (1.0 + 0.01 * e)
        })
        .collect();
    let mut profile = monotone_majorant(&raw, h);
    profile.values = raw.iter().map(|v| v.clamp(0.0, 1.0)).collect();
    let fit = fit_phi_model(&profile, false).unwrap();
    assert!((fit.a / 0.7 - 1.0).abs() < 0.05 && (fit.b / 2.5 - 1.0).abs() < 0.05, "{fit:?}");
}

#[test]
fn zero_noise_has_zero_amplitude() {
    let family = presets::gaussian_narrow(100).unwrap();
    let points: Vec<Vec<f64>> = (0..21).map(|k| vec![0.4 + 0.01 * k as f64]).collect();
    let eval = ProjectorSet::new(&family, &points, DEFAULT_RANK_TOL).unwrap();
    let profile = monotone_minorant(&sample_phi_profile(&family, &[0.5], 0.001, 200, DEFAULT_RANK_TOL).unwrap(), 0.001);
    let r = mc_amplitude(&family, &[0.5], &[1.0, 0.2, -0.1], 0.0, &eval, 5, 3, &profile).unwrap();
    assert!(r.z1.iter().chain(&r.z2).all(|&v| v == 0.0));
    let again = mc_amplitude(&family, &[0.5], &[1.0, 0.2, -0.1], 0.01, &eval, 5, 3, &profile).unwrap();
    let twice = mc_amplitude(&family, &[0.5], &[1.0, 0.2, -0.1], 0.01, &eval, 5, 3, &profile).unwrap();
    assert_eq!(again, twice);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn principal_angle_matches_the_dense_oracle(seed in 0u64..10_000, r1 in 1usize..4, r2 in 1usize..4) {
        let a = random_matrix(9, r1, seed);
        let b = random_matrix(9, r2, seed + 1);
        let pa = range_basis(&response(a.clone()), DEFAULT_RANK_TOL);
        let pb = range_basis(&response(b.clone()), DEFAULT_RANK_TOL);
        let v = principal_angle_norm(&pa, &pb);
        prop_assert!((v - principal_angle_norm(&pb, &pa)).abs() < 1e-12);
        prop_assert!((v - dense_cosine(&a, &b)).abs() < 1e-10);
        prop_assert!((0.0..=1.0).contains(&v));
    }

    #[test]
    fn principal_angle_ignores_the_basis(seed in 0u64..10_000) {
        let a = random_matrix(10, 3, seed);
        let b = random_matrix(10, 2, seed + 7);
        // Same column spaces through random invertible mixes.
        let a2 = &a * random_matrix(3, 3, seed + 11);
        let b2 = &b * random_matrix(2, 2, seed + 13);
        let v = principal_angle_norm(&range_basis(&response(a), 1e-12), &range_basis(&response(b), 1e-12));
        let w = principal_angle_norm(&range_basis(&response(a2), 1e-12), &range_basis(&response(b2), 1e-12));
        prop_assert!((v - w).abs() < 1e-9);
    }

    #[test]
    fn majorant_is_monotone_above_and_idempotent(raw in prop::collection::vec(0.0f64..1.0, 2..40)) {
        let p = monotone_majorant(&raw, 0.1);
        prop_assert_eq!(p.values[0], 0.0);
        for k in 1..raw.len() {
            prop_assert!(p.values[k] >= p.values[k - 1]);
            prop_assert!(p.values[k] >= raw[k]);
        }
        prop_assert_eq!(&monotone_majorant(&p.values, 0.1).values, &p.values);
    }

    #[test]
    fn minorant_is_monotone_and_below(raw in prop::collection::vec(0.0f64..1.0, 2..40)) {
        let p = monotone_minorant(&raw, 0.1);
        for k in 1..raw.len() {
            prop_assert!(p.values[k] >= p.values[k - 1]);
            prop_assert!(p.values[k] <= raw[k]);
        }
    }

    #[test]
    fn quantile_does_not_overshoot(raw in prop::collection::vec(0.0f64..1.0, 3..30), pick in 1usize..29) {
        let p = monotone_majorant(&raw, 0.5);
        let k = pick % (raw.len() - 1) + 1;
        if p.values[k] > p.values[k - 1] {
            let q = p.quantile_inverse(p.values[k]).unwrap();
            prop_assert!(q <= p.distance(k) + 1e-12);
        }
    }

    #[test]
    fn location_bound_grows_with_theta(t1 in 0.0f64..0.22, t2 in 0.0f64..0.22) {
        let family_profile = monotone_majorant(&(0..=400).map(|k| (k as f64 / 300.0).min(1.0)).collect::<Vec<_>>(), 0.01);
        let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
        let a = location_error_bound(lo, &family_profile).value().unwrap();
        let b = location_error_bound(hi, &family_profile).value().unwrap();
        prop_assert!(a <= b);
    }
}
