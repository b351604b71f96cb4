// Compare the least-squares R-functions with their softplus-squared
// counterparts: only the latter keep R₃ decreasing everywhere.

use lssan::objectives::{RFamily, Which};

pub fn run_example() -> lssan::Result<()> {
    println!(
        "{:>6} {:>12} {:>12} {:>12} {:>12}",
        "z", "ls-gan R3", "ls-san R3", "ls-gan r3", "ls-san r3"
    );
    for i in -4..=6 {
        let z = i as f64 * 0.5;
        println!(
            "{z:>6.1} {:>12.5} {:>12.5} {:>12.5} {:>12.5}",
            RFamily::LsGan.eval_scalar(Which::R3, z),
            RFamily::LsSan.eval_scalar(Which::R3, z),
            RFamily::LsGan.eval_scalar(Which::DR3, z),
            RFamily::LsSan.eval_scalar(Which::DR3, z),
        );
    }
    for family in RFamily::ALL {
        println!(
            "{:<10} usable with the sliced objective: {}",
            family.name(),
            family.san_valid()
        );
    }
    match RFamily::LsGan.require_san_valid() {
        Err(e) => println!("ls-gan rejected: {e}"),
        Ok(()) => unreachable!("ls-gan R3 increases past z = 1"),
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("soft monotonization example failed");
}
