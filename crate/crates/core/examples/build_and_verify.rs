// Build the quadrature POVM for a qubit with two copies, save it, load it
// back and re-check every certificate.

use optimal_povm::povm::{build_povm, check_completeness, check_optimality, check_universality, load_povm, save_povm, BuildOptions};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let povm = build_povm(2, 2, BuildOptions::default())?;
    println!("d = 2, N = 2: {} outcomes, weights sum to {:.15}", povm.len(), povm.weight_sum());

    let dir = std::env::temp_dir().join(format!("optimal-povm-example-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("qubit_n2.json");
    save_povm(&povm, &path)?;
    let loaded = load_povm(&path)?;
    std::fs::remove_dir_all(&dir)?;

    let completeness = check_completeness(&loaded)?;
    let optimality = check_optimality(&loaded)?;
    let universality = check_universality(&loaded)?;
    println!("completeness {completeness:.2e}, optimality {optimality:.2e}, universality {universality:.2e}");
    assert!(optimality <= 1e-10);
    assert_eq!(loaded, povm);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
