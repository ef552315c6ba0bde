// A POVM that is exact one level above its copy number can be restricted
// to fewer copies. The minimal grid is not: its universality residual is
// visible, while a grid built for N + 1 restricts cleanly to N.

use optimal_povm::estimation::{mean_fidelity_exact, optimal_fidelity_f64};
use optimal_povm::povm::{build_povm, check_optimality, check_universality, restrict_povm, BuildOptions};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let minimal = build_povm(2, 2, BuildOptions::default())?;
    println!("minimal d = 2, N = 2 grid: universality residual {:.3e}", check_universality(&minimal)?);

    let bigger = build_povm(2, 3, BuildOptions::default())?;
    for n in 1..=3 {
        let r = restrict_povm(&bigger, n)?;
        let f = mean_fidelity_exact(&r)?.value;
        println!(
            "restricted to N = {n}: optimality {:.1e}, mean fidelity {f:.12} (optimal {:.12})",
            check_optimality(&r)?,
            optimal_fidelity_f64(n, 2)?
        );
        assert!(check_optimality(&r)? < 1e-10);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
