//! Localization and known-weights operator error against the noise level.

use spikeloc::experiments::sweep::{run_sweep, summarize, trials_at, SweepNoise, SweepParams};
use spikeloc::family::presets;
use spikeloc::geometry::DEFAULT_RANK_TOL;
use spikeloc::localize::{suggest_coarse_step, Domain};

fn main() -> spikeloc::Result<()> {
    let family = presets::gaussian_narrow(100)?;
    let domain = Domain::new(vec![0.0], vec![1.0])?;
    let params = SweepParams {
        thetas: vec![0.1, 0.25, 0.5, 1.0],
        trials: 20,
        seed: 0,
        spike_range: [0.2, 0.8],
        gamma: vec![1.0, 0.5, -0.25],
        coarse_step: suggest_coarse_step(&family, &[0.5], 0.25, 1.0, DEFAULT_RANK_TOL)?,
        noise: SweepNoise::White,
        with_gamma: true,
        rank_tol: DEFAULT_RANK_TOL,
    };
    let trials = run_sweep(&family, &domain, &params)?;
    for &theta in &params.thetas {
        let at = trials_at(&trials, theta);
        let px = summarize(&at.iter().map(|t| t.error_px).collect::<Vec<_>>());
        let g = summarize(&at.iter().filter_map(|t| t.gamma_error).collect::<Vec<_>>());
        println!("theta {theta:4}: mean {:.4} px, median {:.4} px; gamma median {:.3e}", px.mean, px.median, g.median);
    }
    Ok(())
}
