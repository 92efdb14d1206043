//! Decorrelation profile of the three 1-D families and the fitted model.

use spikeloc::geometry::{fit_phi_model, monotone_majorant, sample_phi_profile, DEFAULT_RANK_TOL};
use spikeloc::family::presets;

fn main() -> spikeloc::Result<()> {
    let h = 0.0005;
    for (name, family) in [
        ("gaussian_narrow", presets::gaussian_narrow(100)?),
        ("gaussian_wide", presets::gaussian_wide(100)?),
        ("hats", presets::hats(100)?),
    ] {
        let raw = sample_phi_profile(&family, &[0.5], h, 500, DEFAULT_RANK_TOL)?;
        let profile = monotone_majorant(&raw, h);
        let q = |t| profile.quantile_inverse(t).map_or("-".to_string(), |d| format!("{d:.4}"));
        print!("{name:16} phi^-1(0.25) {} phi^-1(0.5) {} phi^-1(0.9) {}", q(0.25), q(0.5), q(0.9));
        match fit_phi_model(&profile, false) {
            Ok(m) => println!("  model a {:.4} b {:.3}", m.a, m.b),
            Err(e) => println!("  no model: {e}"),
        }
    }
    Ok(())
}
