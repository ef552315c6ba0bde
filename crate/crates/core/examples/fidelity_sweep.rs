// Analytic and Monte Carlo mean fidelity against (N + 1)/(N + d).

use optimal_povm::estimation::{mean_fidelity_exact, mean_fidelity_mc, optimal_fidelity_f64};
use optimal_povm::povm::{build_povm, BuildOptions};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    println!("{:>2} {:>2} {:>12} {:>12} {:>9} {:>9}", "d", "N", "analytic", "monte carlo", "stderr", "optimal");
    for (d, n) in [(2, 1), (2, 2), (2, 3), (3, 1)] {
        let povm = build_povm(d, n, BuildOptions::default())?;
        let exact = mean_fidelity_exact(&povm)?.value;
        let mc = mean_fidelity_mc(&povm, 5_000, 11)?;
        let best = optimal_fidelity_f64(n, d)?;
        println!("{d:>2} {n:>2} {exact:>12.9} {:>12.6} {:>9.1e} {best:>9.6}", mc.value, mc.stderr);
        assert!((exact - best).abs() < 1e-12);
        assert!((mc.value - best).abs() < 5.0 * mc.stderr);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
