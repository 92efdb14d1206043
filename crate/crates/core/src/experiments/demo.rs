//! Two-dimensional bead-field demo: detection on the astigmatic family and
//! operator recovery from the isolated detections with unit weights.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::DemoSection;
use crate::error::{invalid, Result};
use crate::family::{norm, synthesize_measurement, NoiseSpec, OperatorFamily, SpikeTrain};
use crate::localize::{detect_peaks, CorrelationField, DetectOptions, Domain, SpikeEstimate, SpikeStatus};
use crate::recover::solve_known_weights;
use crate::seeds;

/// Bead positions and which of them were placed as isolated beads.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub positions: Vec<Vec<f64>>,
    pub isolated: Vec<bool>,
}

/// Lattice scene: slots every `spacing` pixels starting half a spacing from
/// the border. Slots are shuffled; the first `isolated` slots get one bead
/// jittered by up to `jitter` per axis, the next `clustered_pairs` get two
/// beads `pair_distance` apart in a random direction.
pub fn demo_scene(p: &DemoSection, seed: u64) -> Result<Scene> {
    let side = ((p.pixels as f64 - p.spacing) / p.spacing).floor() as usize + 1;
    if p.isolated + p.clustered_pairs > side * side {
        return invalid(format!("scene needs {} slots, lattice has {}", p.isolated + p.clustered_pairs, side * side));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut slots: Vec<(f64, f64)> = (0..side * side)
        .map(|s| (0.5 * p.spacing + (s % side) as f64 * p.spacing, 0.5 * p.spacing + (s / side) as f64 * p.spacing))
        .collect();
    slots.shuffle(&mut rng);
    let mut positions = Vec::new();
    let mut isolated = Vec::new();
    for &(cx, cy) in &slots[..p.isolated] {
        let dx = rng.random_range(-p.jitter..=p.jitter);
        let dy = rng.random_range(-p.jitter..=p.jitter);
        positions.push(vec![cx + dx, cy + dy]);
        isolated.push(true);
    }
    for &(cx, cy) in &slots[p.isolated..p.isolated + p.clustered_pairs] {
        let a = rng.random_range(0.0..std::f64::consts::PI);
        let (hx, hy) = (0.5 * p.pair_distance * a.cos(), 0.5 * p.pair_distance * a.sin());
        positions.push(vec![cx + hx, cy + hy]);
        positions.push(vec![cx - hx, cy - hy]);
        isolated.extend([false, false]);
    }
    Ok(Scene { positions, isolated })
}

/// Operator coordinates of the demo: over the eight filters the constant
/// term is a bump centred between filters 4 and 5, and the `x` and `y`
/// terms tilt it in opposite directions with amplitude 0.4.
pub fn demo_gamma(num_filters: usize, num_modulators: usize) -> Vec<f64> {
    let c = 0.5 * (num_filters as f64 - 1.0);
    let mut g = Vec::with_capacity(num_filters * num_modulators);
    for k in 0..num_modulators {
        for j in 0..num_filters {
            let t = (j as f64 - c) / c.max(1.0);
            let bump = (-(t * t)).exp();
            g.push(match k {
                0 => bump,
                1 => 0.4 * t * bump,
                2 => -0.4 * t * bump,
                _ => 0.0,
            });
        }
    }
    g
}

/// `G = sum_p E(z_p)^T E(z_p)` over the grid nodes. With it, the
/// Hilbert–Schmidt distance between the dense operators on the grid is
/// `sqrt(d^T G d)` for a coordinate difference `d`.
pub fn operator_gram(family: &OperatorFamily) -> Result<DMatrix<f64>> {
    let i = family.num_coords();
    let mut g = DMatrix::zeros(i, i);
    for p in 0..family.grid().len() {
        let z = family.grid().point(p).to_vec();
        g += family.response(&z)?.gram();
    }
    Ok(g)
}

pub fn hs_relative_error(gram: &DMatrix<f64>, estimate: &[f64], truth: &[f64]) -> f64 {
    let t = DVector::from_column_slice(truth);
    let d = DVector::from_column_slice(estimate) - &t;
    let den = t.dot(&(gram * &t));
    if den <= 0.0 {
        return f64::NAN;
    }
    (d.dot(&(gram * &d)).max(0.0) / den).sqrt()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DemoMatch {
    pub detection: usize,
    pub truth: usize,
    pub error_px: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DemoReport {
    pub theta: f64,
    pub sigma: f64,
    pub detections: Vec<SpikeEstimate>,
    /// Isolated detections matched to their nearest true bead.
    pub matches: Vec<DemoMatch>,
    /// Mean distance over `matches`, in pixels.
    pub localization_error_px: f64,
    /// Number of isolated detections used for recovery.
    pub recovered_from: usize,
    /// Clustered true beads whose nearest detection is flagged isolated.
    pub clustered_missed: usize,
    pub gamma_hat: Vec<f64>,
    pub gamma_rel_error: f64,
    pub operator_error: f64,
    pub warnings: Vec<String>,
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

fn nearest(points: &[Vec<f64>], x: &[f64]) -> Option<(usize, f64)> {
    points
        .iter()
        .enumerate()
        .map(|(k, p)| (k, dist(p, x)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
}

/// Synthesize the scene with unit weights and white noise of level
/// `sigma = theta |y0| / sqrt(M)`, detect, and recover the operator from
/// the isolated detections. Returns the report and the coarse field.
pub fn run_demo(
    family: &OperatorFamily,
    scene: &Scene,
    gamma: &[f64],
    theta: f64,
    params: &DemoSection,
    noise_seed: u64,
    gram: &DMatrix<f64>,
) -> Result<(DemoReport, CorrelationField)> {
    if family.dim() != 2 {
        return invalid("the demo runs on a two-dimensional family");
    }
    let spikes = SpikeTrain::new(scene.positions.clone(), vec![1.0; scene.positions.len()])?;
    let clean = synthesize_measurement(family, &spikes, gamma, &NoiseSpec::None)?;
    let sigma = theta * norm(&clean.clean) / (family.num_samples() as f64).sqrt();
    let noise = if sigma > 0.0 { NoiseSpec::WhiteGaussian { sigma, seed: noise_seed } } else { NoiseSpec::None };
    let meas = synthesize_measurement(family, &spikes, gamma, &noise)?;
    let (lo, hi) = family.grid().bounds();
    let domain = Domain::new(lo, hi)?;
    let opts = DetectOptions {
        weak_threshold: params.weak_threshold,
        exclusion_radius: Some(params.exclusion_radius),
        ..DetectOptions::new(params.coarse_step)
    };
    let (detections, field) = detect_peaks(family, &meas.y, &domain, &opts)?;
    let mut warnings = Vec::new();
    let mut matches = Vec::new();
    let mut used = Vec::new();
    for (d, det) in detections.iter().enumerate() {
        if det.status != SpikeStatus::Isolated {
            continue;
        }
        used.push(det.position.clone());
        if let Some((t, e)) = nearest(&scene.positions, &det.position) {
            matches.push(DemoMatch { detection: d, truth: t, error_px: e });
        }
    }
    let det_pos: Vec<Vec<f64>> = detections.iter().map(|d| d.position.clone()).collect();
    let clustered_missed = scene
        .positions
        .iter()
        .zip(&scene.isolated)
        .filter(|(_, &iso)| !iso)
        .filter(|(x, _)| matches!(nearest(&det_pos, x), Some((k, _)) if detections[k].status == SpikeStatus::Isolated))
        .count();
    if used.is_empty() {
        return invalid("no isolated detections to recover the operator from");
    }
    let localization_error_px = matches.iter().map(|m| m.error_px).sum::<f64>() / matches.len().max(1) as f64;
    let refs: Vec<&[f64]> = vec![meas.y.as_slice(); used.len()];
    let kw = solve_known_weights(family, &used, &vec![1.0; used.len()], &refs)?;
    warnings.extend(kw.warnings.iter().cloned());
    let gamma_hat: Vec<f64> = kw.gamma.to_vec();
    let operator_error = hs_relative_error(gram, &gamma_hat, gamma);
    let report = DemoReport {
        theta,
        sigma,
        gamma_rel_error: kw.relative_error(gamma),
        gamma_hat,
        recovered_from: used.len(),
        detections,
        matches,
        localization_error_px,
        clustered_missed,
        operator_error,
        warnings,
    };
    Ok((report, field))
}

/// Seed of the demo noise at level index `l`.
pub fn noise_seed(seed: u64, l: usize) -> u64 {
    seeds::derive2(seed, 0xde50, l as u64)
}
