// Sample measurement records for a fixed state and watch the empirical
// distribution converge.

use optimal_povm::estimation::{sample_outcomes, Estimator};
use optimal_povm::povm::{build_povm, BuildOptions};
use optimal_povm::symmetric::{fidelity, haar_random_state};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let povm = build_povm(2, 3, BuildOptions::default())?;
    let state = haar_random_state(2, 2024);
    let exact = povm.outcome_probs(&state)?;

    for shots in [100, 1_000, 10_000, 100_000] {
        let counts = sample_outcomes(&povm, &state, shots, 9)?;
        println!("{shots:>7} shots: TV distance {:.4}", exact.tv_distance(&counts));
    }

    let counts = sample_outcomes(&povm, &state, 1, 1)?;
    let a = counts.iter().position(|&c| c == 1).expect("one shot");
    println!("single shot guessed outcome {a}, fidelity {:.4}", fidelity(povm.guess(a), &state)?);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
