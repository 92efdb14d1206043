//! Monte-Carlo amplitudes of the noise cross term and noise energy.

use spikeloc::family::presets;
use spikeloc::geometry::{mc_amplitude, monotone_majorant, sample_phi_profile, ProjectorSet, DEFAULT_RANK_TOL};

fn main() -> spikeloc::Result<()> {
    let family = presets::gaussian_narrow(100)?;
    let h = 0.0005;
    let profile = monotone_majorant(&sample_phi_profile(&family, &[0.5], h, 500, DEFAULT_RANK_TOL)?, h);
    let points: Vec<Vec<f64>> = (0..=100).map(|k| vec![0.3 + 0.004 * k as f64]).collect();
    let eval = ProjectorSet::new(&family, &points, DEFAULT_RANK_TOL)?;
    for sigma in [0.0, 0.05, 0.1, 0.2] {
        let r = mc_amplitude(&family, &[0.5], &[1.0, 0.5, -0.25], sigma, &eval, 50, 11, &profile)?;
        println!(
            "sigma {sigma:4}: Z1 {:.4} +- {:.4}, Z2 {:.4} +- {:.4}, level {:.4}, bound {:?}",
            r.z1_mean, r.z1_std, r.z2_mean, r.z2_std, r.level, r.bound
        );
    }
    Ok(())
}
