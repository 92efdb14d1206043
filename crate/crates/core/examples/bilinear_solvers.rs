//! Unknown weights and operator: the three bilinear solvers on one instance.

use spikeloc::experiments::phase::{phase_instance, run_solvers};
use spikeloc::recover::{product_convolution_min_spikes, SolverKind, SolverOptions};

fn main() -> spikeloc::Result<()> {
    let k = 2;
    println!("generic count for J = 3, K = {k}: N >= {:?}", product_convolution_min_spikes(3, k));
    for n in [4, 10, 30] {
        let inst = phase_instance(k, n, 1000, 42)?;
        let reports = run_solvers(&inst, &SolverKind::all(), &SolverOptions::default(), 1e-6);
        for r in reports {
            println!(
                "N {n:2} {:18} iterations {:5} rank {} matrix error {:.3e}",
                r.solver.name(),
                r.iterations,
                r.rank,
                r.final_error().unwrap_or(f64::NAN)
            );
        }
    }
    Ok(())
}
