use approx::assert_relative_eq;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

mod common;

use common::qr_range_basis;
use spikeloc::family::{presets, synthesize_measurement, NoiseSpec, OperatorFamily, SpikeTrain};
use spikeloc::geometry::{
    fit_phi_model, isolation_radius, location_error_bound, monotone_majorant, projector_at, sample_phi_profile,
    LocationBound, DEFAULT_RANK_TOL,
};
use spikeloc::localize::{
    correlation_field, correlation_objective, detect_peaks, estimate_alpha, localize_single, suggest_coarse_step,
    DetectOptions, Domain, LocalizeOptions, SpikeStatus,
};

fn domain_of(family: &OperatorFamily) -> Domain {
    let (lo, hi) = family.grid().bounds();
    Domain::new(lo, hi).unwrap()
}

fn image(family: &OperatorFamily, xs: &[f64], w: &[f64], gamma: &[f64]) -> Vec<f64> {
    let spikes = SpikeTrain::new(xs.iter().map(|&x| vec![x]).collect(), w.to_vec()).unwrap();
    synthesize_measurement(family, &spikes, gamma, &NoiseSpec::None).unwrap().y
}

/// `min_a |E a - y|^2 / 2` from a pivoted-QR basis of the columns.
fn ls_residual(e: &DMatrix<f64>, y: &[f64]) -> f64 {
    let y = DVector::from_column_slice(y);
    let q = qr_range_basis(e, 1e-12);
    0.5 * (&y - &q * q.tr_mul(&y)).norm_squared()
}

#[test]
fn measurement_in_the_range_attains_the_upper_bound() {
    let family = presets::gaussian_narrow(100).unwrap();
    let y = image(&family, &[0.37], &[1.0], &[0.4, -1.0, 2.0]);
    let h = correlation_objective(&family, &y, &[0.37], DEFAULT_RANK_TOL).unwrap();
    let half = 0.5 * y.iter().map(|v| v * v).sum::<f64>();
    assert_relative_eq!(h, half, max_relative = 1e-12);
}

#[test]
fn measurement_orthogonal_to_the_range_gives_zero() {
    let family = presets::gaussian_narrow(100).unwrap();
    let p = projector_at(&family, &[0.5], DEFAULT_RANK_TOL).unwrap();
    let mut y = vec![0.0; 100];
    y[3] = 1.0;
    y[97] = -2.0;
    let py = p.apply(&y);
    let ortho: Vec<f64> = y.iter().zip(&py).map(|(a, b)| a - b).collect();
    assert!(correlation_objective(&family, &ortho, &[0.5], DEFAULT_RANK_TOL).unwrap() < 1e-28);
}

#[test]
fn true_position_maximizes_the_noiseless_objective() {
    let family = presets::gaussian_wide(100).unwrap();
    let y = image(&family, &[0.613], &[1.0], &[1.0, 0.3, -0.6]);
    let at_truth = correlation_objective(&family, &y, &[0.613], DEFAULT_RANK_TOL).unwrap();
    let pts: Vec<Vec<f64>> = (0..=200).map(|k| vec![k as f64 / 200.0]).collect();
    let field = correlation_field(&family, &y, &pts, DEFAULT_RANK_TOL).unwrap();
    assert!(field.values.iter().all(|&v| v <= at_truth * (1.0 + 1e-12)));
    assert!(field.values.iter().all(|&v| v >= 0.0 && v <= field.half_norm_sq * (1.0 + 1e-12)));
}

#[test]
fn spike_on_a_coarse_node_is_found_exactly() {
    let family = presets::gaussian_narrow(100).unwrap();
    let domain = domain_of(&family);
    let y = image(&family, &[0.5], &[1.0], &[1.0, 0.2, 0.1]);
    let est = localize_single(&family, &y, &domain, &LocalizeOptions::new(0.05)).unwrap();
    assert!((est.position[0] - 0.5).abs() < 1e-12);
}

#[test]
fn off_grid_round_trip_for_every_family() {
    for family in [presets::gaussian_narrow(100), presets::gaussian_wide(100), presets::hats(100)] {
        let family = family.unwrap();
        let domain = domain_of(&family);
        let step = suggest_coarse_step(&family, &[0.5], 0.25, domain.extent(), DEFAULT_RANK_TOL).unwrap();
        for x in [0.2871, 0.4337, 0.6519] {
            let y = image(&family, &[x], &[1.3], &[1.0, -0.5, 0.25]);
            let est = localize_single(&family, &y, &domain, &LocalizeOptions::new(step)).unwrap();
            assert!((est.position[0] - x).abs() < 1e-9, "x {x}: {}", est.position[0]);
        }
    }
}

#[test]
fn coarse_step_gives_three_samples_before_half_decorrelation() {
    for family in [presets::gaussian_narrow(100), presets::hats(100)] {
        let family = family.unwrap();
        let step = suggest_coarse_step(&family, &[0.5], 0.25, 1.0, DEFAULT_RANK_TOL).unwrap();
        let h = 0.0005;
        let profile = monotone_majorant(&sample_phi_profile(&family, &[0.5], h, 500, DEFAULT_RANK_TOL).unwrap(), h);
        let half = profile.quantile_inverse(0.5).unwrap();
        assert!(3.0 * step <= half * (1.0 + 1e-2), "step {step}, half {half}");
    }
}

#[test]
fn certificate_holds_for_bounded_relative_noise() {
    let family = presets::gaussian_narrow(100).unwrap();
    let domain = domain_of(&family);
    let step = suggest_coarse_step(&family, &[0.5], 0.25, 1.0, DEFAULT_RANK_TOL).unwrap();
    let h = 0.0005;
    for (t, theta) in [0.05, 0.1, 0.2].into_iter().enumerate() {
        let x = 0.31 + 0.17 * t as f64;
        let spikes = SpikeTrain::single(vec![x], 1.0).unwrap();
        let y = synthesize_measurement(&family, &spikes, &[1.0, -0.4, 0.3], &NoiseSpec::BoundedRelative { theta, seed: t as u64 })
            .unwrap()
            .y;
        let est = localize_single(&family, &y, &domain, &LocalizeOptions::new(step)).unwrap();
        let profile = monotone_majorant(&sample_phi_profile(&family, &[x], h, 500, DEFAULT_RANK_TOL).unwrap(), h);
        let LocationBound::Within(r) = location_error_bound(theta, &profile) else { panic!("no bound at {theta}") };
        assert!((est.position[0] - x).abs() <= r);
    }
}

#[test]
fn alpha_recovers_full_rank_coefficients() {
    let family = presets::gaussian_narrow(100).unwrap();
    let alpha0 = [0.7, -1.2, 0.05];
    let y = family.response(&[0.45]).unwrap().apply(&alpha0);
    let a = estimate_alpha(&family, &[0.45], &y, DEFAULT_RANK_TOL).unwrap();
    for (u, v) in a.alpha.iter().zip(&alpha0) {
        assert_relative_eq!(u, v, epsilon = 1e-10);
    }
    let zero = estimate_alpha(&family, &[0.45], &vec![0.0; 100], DEFAULT_RANK_TOL).unwrap();
    assert!(zero.alpha.iter().all(|&v| v == 0.0));
}

#[test]
fn alpha_is_minimum_norm_on_rank_deficient_responses() {
    let family = presets::smooth_product_convolution(300, 2, 4).unwrap();
    let mut y = vec![0.0; 300];
    for (m, v) in y.iter_mut().enumerate() {
        *v = ((m as f64) * 0.37).sin();
    }
    let x = [5.1];
    let a = estimate_alpha(&family, &x, &y, DEFAULT_RANK_TOL).unwrap();
    // Minimum norm: alpha has no component along the null space of E.
    let e = family.response(&x).unwrap().to_dense();
    let eig = nalgebra::SymmetricEigen::new(e.transpose() * &e);
    let top = eig.eigenvalues.max();
    let alpha = DVector::from_column_slice(&a.alpha);
    let mut null_dims = 0;
    for (k, &l) in eig.eigenvalues.iter().enumerate() {
        if l < 1e-12 * top {
            null_dims += 1;
            assert!(eig.eigenvectors.column(k).dot(&alpha).abs() <= 1e-10 * alpha.norm());
        }
    }
    assert_eq!(null_dims, family.num_coords() - 3);
    let p = projector_at(&family, &x, DEFAULT_RANK_TOL).unwrap().apply(&y);
    let ea = family.response(&x).unwrap().apply(&a.alpha);
    for (u, v) in ea.iter().zip(&p) {
        assert_relative_eq!(u, v, epsilon = 1e-10);
    }
}

#[test]
fn single_noiseless_spike_gives_one_isolated_detection() {
    let family = presets::gaussian_narrow(100).unwrap();
    let domain = domain_of(&family);
    let y = image(&family, &[0.4237], &[1.0], &[1.0, 0.3, 0.2]);
    let step = suggest_coarse_step(&family, &[0.5], 0.25, 1.0, DEFAULT_RANK_TOL).unwrap();
    let (dets, _) = detect_peaks(&family, &y, &domain, &DetectOptions::new(step)).unwrap();
    assert_eq!(dets.len(), 1);
    assert_eq!(dets[0].status, SpikeStatus::Isolated);
    assert!((dets[0].position[0] - 0.4237).abs() < 1e-9);
}

#[test]
fn separated_spikes_are_isolated_within_the_radius() {
    let family = presets::gaussian_narrow(400).unwrap();
    let domain = domain_of(&family);
    let h = 0.0005;
    let profile = monotone_majorant(&sample_phi_profile(&family, &[0.5], h, 400, DEFAULT_RANK_TOL).unwrap(), h);
    let model = fit_phi_model(&profile, false).unwrap();
    let iso = isolation_radius(&model, 1.0, 2, 5.0).unwrap();
    let sep = 1.2 * iso.delta_min;
    let xs = [0.5 - 0.5 * sep, 0.5 + 0.5 * sep];
    let y = image(&family, &xs, &[1.0, 0.8], &[1.0, 0.3, 0.2]);
    let opts = DetectOptions::new(0.005).with_isolation(&iso);
    let (dets, _) = detect_peaks(&family, &y, &domain, &opts).unwrap();
    assert!(dets.len() >= 2);
    for x in xs {
        let d = dets
            .iter()
            .min_by(|a, b| (a.position[0] - x).abs().total_cmp(&(b.position[0] - x).abs()))
            .unwrap();
        assert_eq!(d.status, SpikeStatus::Isolated);
        assert!((d.position[0] - x).abs() <= iso.r_bound);
    }
}

#[test]
fn close_detections_are_flagged_clustered() {
    let family = presets::gaussian_wide(200).unwrap();
    let domain = domain_of(&family);
    let y = image(&family, &[0.45, 0.55], &[1.0, 1.0], &[1.0, 0.0, 0.0]);
    let opts = DetectOptions { weak_threshold: 0.01, exclusion_radius: Some(0.06), ..DetectOptions::new(0.005) };
    let (dets, _) = detect_peaks(&family, &y, &domain, &opts).unwrap();
    assert!(dets.len() >= 2);
    assert!(dets.iter().any(|d| d.status == SpikeStatus::Clustered));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn objective_complements_the_least_squares_residual(
        x in 0.05f64..0.95,
        y in prop::collection::vec(-1.0f64..1.0, 60),
    ) {
        let family = presets::hats(60).unwrap();
        let h = correlation_objective(&family, &y, &[x], DEFAULT_RANK_TOL).unwrap();
        let e = family.response(&[x]).unwrap().to_dense();
        let half = 0.5 * y.iter().map(|v| v * v).sum::<f64>();
        prop_assert!((half - h - ls_residual(&e, &y)).abs() <= 1e-10 * half.max(1.0));
    }

    #[test]
    fn scaling_the_measurement_keeps_the_estimate(x in 0.15f64..0.85, t in 0.1f64..10.0) {
        let family = presets::gaussian_wide(80).unwrap();
        let domain = domain_of(&family);
        let y = image(&family, &[x], &[1.0], &[1.0, -0.2, 0.4]);
        let ty: Vec<f64> = y.iter().map(|v| t * v).collect();
        let opts = LocalizeOptions::new(0.04);
        let a = localize_single(&family, &y, &domain, &opts).unwrap();
        let b = localize_single(&family, &ty, &domain, &opts).unwrap();
        prop_assert!((a.position[0] - b.position[0]).abs() < 1e-9);
        prop_assert!((b.objective - t * t * a.objective).abs() <= 1e-10 * b.objective.max(1e-300));
    }
}
