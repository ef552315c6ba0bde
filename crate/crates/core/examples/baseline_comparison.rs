// Measuring each copy in a fixed basis and guessing by majority vote
// against the optimal collective measurement.

use optimal_povm::estimation::{mean_fidelity_mc, optimal_fidelity_f64, separate_measurement_baseline};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    for n in 2..=4 {
        let baseline = separate_measurement_baseline(2, n)?;
        let r = mean_fidelity_mc(&baseline, 20_000, 5)?;
        let best = optimal_fidelity_f64(n, 2)?;
        println!("N = {n}: separate {:.4} ± {:.4}, collective {best:.4}", r.value, r.stderr);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
