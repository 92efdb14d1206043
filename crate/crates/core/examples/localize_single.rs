//! One off-grid spike: coarse scan, refinement, coefficients.

use spikeloc::family::{presets, synthesize_measurement, NoiseSpec, SpikeTrain};
use spikeloc::geometry::DEFAULT_RANK_TOL;
use spikeloc::localize::{localize_single, suggest_coarse_step, Domain, LocalizeOptions};

fn main() -> spikeloc::Result<()> {
    let family = presets::gaussian_narrow(100)?;
    let gamma = [1.0, -0.4, 0.3];
    let domain = Domain::new(vec![0.0], vec![1.0])?;
    let step = suggest_coarse_step(&family, &[0.5], 0.25, domain.extent(), DEFAULT_RANK_TOL)?;
    println!("coarse step {step:.4}");
    for (x, theta) in [(0.3137, 0.0), (0.3137, 0.2), (0.6621, 0.5)] {
        let noise = if theta > 0.0 { NoiseSpec::BoundedRelative { theta, seed: 1 } } else { NoiseSpec::None };
        let y = synthesize_measurement(&family, &SpikeTrain::single(vec![x], 1.0)?, &gamma, &noise)?.y;
        let est = localize_single(&family, &y, &domain, &LocalizeOptions::new(step))?;
        println!(
            "x {x} theta {theta}: x_hat {:.8} (error {:.2e} px) alpha {:?}",
            est.position[0],
            (est.position[0] - x).abs() / 0.01,
            est.alpha.iter().map(|a| format!("{a:.3}")).collect::<Vec<_>>()
        );
    }
    Ok(())
}
