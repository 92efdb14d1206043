//! Ready-made families used by the experiments and examples.

use super::filter::FilterSpec;
use super::grid::SamplingGrid;
use super::modulator::Modulator;
use super::operator::OperatorFamily;
use crate::error::Result;

/// Scales interpolated from `first` (filter 1) to `last` (filter `count`).
pub fn interpolated_scales(first: f64, last: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![first];
    }
    (0..count)
        .map(|i| {
            let t = i as f64 / (count - 1) as f64;
            last * t + first * (1.0 - t)
        })
        .collect()
}

pub fn gaussian_filters(stds: &[f64]) -> Vec<FilterSpec> {
    stds.iter().map(|&std| FilterSpec::Gaussian { std }).collect()
}

pub fn hat_filters(scales: &[f64]) -> Vec<FilterSpec> {
    scales.iter().map(|&scale| FilterSpec::Hat { scale }).collect()
}

/// Three orthonormalized Gaussians with stds from 0.03 down to 0.01 on
/// `z_m = m / M`.
pub fn gaussian_narrow(m: usize) -> Result<OperatorFamily> {
    OperatorFamily::convolution(
        SamplingGrid::unit_interval(m)?,
        gaussian_filters(&interpolated_scales(0.03, 0.01, 3)),
    )?
    .orthogonalized()
}

/// Three orthonormalized Gaussians with stds from 0.09 down to 0.03.
pub fn gaussian_wide(m: usize) -> Result<OperatorFamily> {
    OperatorFamily::convolution(
        SamplingGrid::unit_interval(m)?,
        gaussian_filters(&interpolated_scales(0.09, 0.03, 3)),
    )?
    .orthogonalized()
}

/// Three orthonormalized hat filters with scales from 0.2 down to 0.02.
pub fn hats(m: usize) -> Result<OperatorFamily> {
    OperatorFamily::convolution(SamplingGrid::unit_interval(m)?, hat_filters(&interpolated_scales(0.2, 0.02, 3)))?
        .orthogonalized()
}

/// Single normalized sinc filter of bandwidth scale `a` sampled with step `b`
/// on `2 * half + 1` points centred at the origin.
pub fn sinc(a: f64, b: f64, half: usize) -> Result<OperatorFamily> {
    let grid = SamplingGrid::regular(vec![-(half as f64) * b], vec![b], vec![2 * half + 1])?;
    OperatorFamily::convolution(grid, vec![FilterSpec::Sinc { scale: a }])
}

/// Product-convolution family on `z_m = 10 m / M` with the narrow Gaussian
/// filters and `k` seeded smooth random modulators of correlation length
/// 10 grid steps.
pub fn smooth_product_convolution(m: usize, k: usize, seed: u64) -> Result<OperatorFamily> {
    let grid = SamplingGrid::scaled_interval(10.0, m)?;
    let corr = 10.0 * 10.0 / m as f64;
    let modulators = (0..k)
        .map(|i| Modulator::smooth_gp(&grid, corr, seed.wrapping_mul(1_000_003).wrapping_add(i as u64)))
        .collect::<Result<Vec<_>>>()?;
    OperatorFamily::product_convolution(grid, gaussian_filters(&interpolated_scales(0.03, 0.01, 3)), modulators)?
        .orthogonalized()
}

/// Astigmatic 2-D family on an `n x n` pixel grid (unit pixels, origin 0):
/// eight axis-aligned anisotropic Gaussians whose x and y widths move in
/// opposite directions, modulated by the monomials `1, x, y`.
pub fn astigmatic(n: usize) -> Result<OperatorFamily> {
    let grid = SamplingGrid::regular(vec![0.0, 0.0], vec![1.0, 1.0], vec![n, n])?;
    let filters = astigmatic_filters(8, 0.7, 1.3);
    let modulators = Modulator::monomials(&grid, 1);
    OperatorFamily::product_convolution(grid, filters, modulators)?.orthogonalized()
}

/// `count` elliptical Gaussians with `std_x` going from `lo` to `hi` and
/// `std_y` from `hi` to `lo`.
pub fn astigmatic_filters(count: usize, lo: f64, hi: f64) -> Vec<FilterSpec> {
    interpolated_scales(lo, hi, count)
        .into_iter()
        .zip(interpolated_scales(hi, lo, count))
        .map(|(sx, sy)| FilterSpec::AnisotropicGaussian {
            covariance: vec![vec![sx * sx, 0.0], vec![0.0, sy * sy]],
        })
        .collect()
}
