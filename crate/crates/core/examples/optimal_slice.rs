// Learn the direction that best separates two planar Gaussians and compare
// it with a brute-force scan over 3600 unit directions.

use lssan::slice_demo::{run_slice_demo, write_slice_demo, SliceDemoConfig};

pub fn run_example() -> lssan::Result<()> {
    let cfg = SliceDemoConfig {
        mu1: [1.5, 1.0],
        mu2: [-1.0, -0.5],
        ..SliceDemoConfig::default()
    };
    let report = run_slice_demo(&cfg)?;
    let first = report.trajectory[0];
    println!(
        "start   omega = ({:+.4}, {:+.4}) objective {:.5}",
        first.x, first.y, first.objective
    );
    println!(
        "learned omega = ({:+.4}, {:+.4}) objective {:.5}",
        report.omega[0],
        report.omega[1],
        report.trajectory.last().map_or(f64::NAN, |s| s.objective)
    );
    println!(
        "oracle  omega = ({:+.4}, {:+.4}) objective {:.5}",
        report.oracle[0], report.oracle[1], report.oracle_objective
    );
    println!(
        "tilted-mean direction = ({:+.4}, {:+.4})",
        report.tilted[0], report.tilted[1]
    );
    println!("|cos(learned, oracle)| = {:.6}", report.cosine.unwrap_or(f64::NAN));
    println!(
        "unnormalized least-squares w = ({:+.4}, {:+.4})",
        report.gan_direction[0], report.gan_direction[1]
    );

    let out = std::env::temp_dir().join("lssan_optimal_slice");
    write_slice_demo(&report, &out)?;
    println!("CSV series written to {}", out.display());
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("optimal slice example failed");
}
