//! Greedy multi-spike detection with isolated / clustered flags.

use spikeloc::family::{presets, synthesize_measurement, NoiseSpec, SpikeTrain};
use spikeloc::geometry::DEFAULT_RANK_TOL;
use spikeloc::localize::{detect_peaks, suggest_coarse_step, DetectOptions, Domain};

fn main() -> spikeloc::Result<()> {
    let family = presets::gaussian_narrow(200)?;
    let domain = Domain::new(vec![0.0], vec![1.0])?;
    let xs = [0.15, 0.42, 0.64, 0.80];
    let spikes = SpikeTrain::new(xs.iter().map(|&x| vec![x]).collect(), vec![1.0, 0.7, 1.0, 0.9])?;
    let y = synthesize_measurement(&family, &spikes, &[1.0, 0.3, 0.2], &NoiseSpec::WhiteGaussian { sigma: 0.01, seed: 3 })?.y;
    let step = suggest_coarse_step(&family, &[0.5], 0.25, 1.0, DEFAULT_RANK_TOL)?;
    // The exclusion ball has to cover the side lobes of H, which sit inside
    // the half-decorrelation distance (about 0.083 here).
    let opts = DetectOptions { exclusion_radius: Some(0.09), ..DetectOptions::new(step) };
    let (dets, field) = detect_peaks(&family, &y, &domain, &opts)?;
    println!("truth {xs:?}; {} coarse nodes, exclusion {}", field.values.len(), opts.exclusion());
    for d in dets {
        println!("x {:.5} H {:.4} {:?}", d.position[0], d.objective, d.status);
    }
    Ok(())
}
