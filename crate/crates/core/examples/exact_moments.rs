// Exact Haar moments of amplitude monomials as rationals.

use optimal_povm::moments::{all_indices, format_rational, moment_value, MomentIndex};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let fourth = moment_value(2, &MomentIndex::parse("1,1", "1,1")?)?;
    println!("<|c1|^4> for d = 2: {}", format_rational(&fourth));
    assert_eq!(format_rational(&fourth), "1/3");

    let mixed = moment_value(3, &MomentIndex::parse("1,2", "2,1")?)?;
    println!("<c1 c2 c2* c1*> for d = 3: {}", format_rational(&mixed));
    assert_eq!(format_rational(&mixed), "1/12");

    println!("all balanced degree-2 moments in d = 2:");
    for idx in all_indices(2, 2) {
        let v = moment_value(2, &idx)?;
        println!("  i = {:?}, j = {:?}: {}", idx.i, idx.j, format_rational(&v));
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
