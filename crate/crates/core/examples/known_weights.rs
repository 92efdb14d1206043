//! Operator coordinates from spikes with known positions and weights,
//! including the singular single-spike case of a product-convolution family.

use spikeloc::family::{presets, synthesize_measurement, NoiseSpec, SpikeTrain};
use spikeloc::recover::solve_known_weights;

fn main() -> spikeloc::Result<()> {
    let family = presets::smooth_product_convolution(1000, 2, 5)?;
    let gamma = [0.8, -0.3, 0.5, 1.1, -0.7, 0.2];
    let xs = [1.9, 4.4, 6.0, 8.3];
    let w = [1.0, 0.6, 1.4, 0.9];
    let ys: Vec<Vec<f64>> = xs
        .iter()
        .zip(&w)
        .map(|(&x, &wn)| {
            let s = SpikeTrain::single(vec![x], wn)?;
            synthesize_measurement(&family, &s, &gamma, &NoiseSpec::WhiteGaussian { sigma: 1e-3, seed: 7 }).map(|m| m.y)
        })
        .collect::<spikeloc::Result<_>>()?;
    for n in [1, 2, 4] {
        let pts: Vec<Vec<f64>> = xs[..n].iter().map(|&x| vec![x]).collect();
        let refs: Vec<&[f64]> = ys[..n].iter().map(Vec::as_slice).collect();
        let kw = solve_known_weights(&family, &pts, &w[..n], &refs)?;
        println!(
            "N = {n}: kappa {:.3e} singular {} gamma error {:.3e}",
            kw.condition.kappa,
            kw.condition.singular,
            kw.relative_error(&gamma)
        );
        for warning in &kw.warnings {
            println!("  warning: {warning}");
        }
    }
    Ok(())
}
