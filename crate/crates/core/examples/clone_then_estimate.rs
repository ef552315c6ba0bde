// Cloning N copies up to M and then measuring cannot beat measuring the N
// copies directly.

use optimal_povm::cloner::{clone_state, single_particle_fidelity, two_step_estimate};
use optimal_povm::estimation::optimal_fidelity_f64;
use optimal_povm::povm::{build_povm, BuildOptions};
use optimal_povm::symmetric::{full_space_guard, haar_random_state};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let (d, n) = (2, 1);
    let guard = full_space_guard();
    let state = haar_random_state(d, 77);
    println!("direct estimate from N = {n}: {:.6}", optimal_fidelity_f64(n, d)?);
    for m in 2..=4 {
        let out = clone_state(&state, n, m, guard)?;
        let povm = build_povm(d, m, BuildOptions::default())?;
        let two = two_step_estimate(&state, n, &povm, guard)?;
        println!(
            "M = {m}: clone fidelity {:.6}, clone-then-estimate {:.6}",
            single_particle_fidelity(&out, &state)?,
            two.pipeline
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
