//! Bead field on the astigmatic 2-D family: detection, flags and operator
//! recovery from the isolated beads.

use spikeloc::experiments::config::DemoSection;
use spikeloc::experiments::demo::{demo_gamma, demo_scene, noise_seed, operator_gram, run_demo};
use spikeloc::family::presets;

fn main() -> spikeloc::Result<()> {
    let params = DemoSection::default();
    let family = presets::astigmatic(params.pixels)?;
    let scene = demo_scene(&params, 0)?;
    let gamma = demo_gamma(8, 3);
    let gram = operator_gram(&family)?;
    for (l, theta) in [0.0, 0.5].into_iter().enumerate() {
        let (report, _) = run_demo(&family, &scene, &gamma, theta, &params, noise_seed(0, l), &gram)?;
        let clustered = report.detections.iter().filter(|d| d.status == spikeloc::localize::SpikeStatus::Clustered).count();
        println!(
            "theta {theta}: {} detections ({clustered} clustered), {} used, localization {:.4} px, operator error {:.4}",
            report.detections.len(),
            report.recovered_from,
            report.localization_error_px,
            report.operator_error
        );
    }
    Ok(())
}
