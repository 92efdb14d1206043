//! Spectral bounds, the location-error certificate and the isolation radius.

use spikeloc::family::presets;
use spikeloc::geometry::{
    critical_theta, fit_phi_model, isolation_radius, location_error_bound, monotone_majorant, sample_phi_profile,
    spectral_bounds, DEFAULT_RANK_TOL,
};

fn main() -> spikeloc::Result<()> {
    let family = presets::gaussian_narrow(200)?;
    let probes: Vec<Vec<f64>> = (0..=40).map(|k| vec![0.3 + 0.01 * k as f64]).collect();
    let sb = spectral_bounds(&family, &probes, DEFAULT_RANK_TOL)?;
    println!("sigma- {:.6} sigma+ {:.6} kappa {:.6} lipschitz {:.3}", sb.sigma_minus, sb.sigma_plus, sb.kappa, sb.lipschitz);

    let h = 0.0005;
    let profile = monotone_majorant(&sample_phi_profile(&family, &[0.5], h, 400, DEFAULT_RANK_TOL)?, h);
    println!("certificate holds for theta < {:.4}", critical_theta());
    for theta in [0.01, 0.05, 0.1, 0.2, 0.22] {
        println!("  theta {theta}: |x_hat - x| <= {:?}", location_error_bound(theta, &profile));
    }
    let model = fit_phi_model(&profile, false)?;
    for c in [0.1, 1.0] {
        let iso = isolation_radius(&model, c, 2, 5.0)?;
        println!("c {c}: delta_min {:.4} r_bound {:.4} r_sharp {:.4}", iso.delta_min, iso.r_bound, iso.r_sharp);
    }
    Ok(())
}
