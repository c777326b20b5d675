//! The threshold exponent and the beam widths it allows.

use billiard_complexity::partition::{beam_width, critical_gamma, feasible};

fn main() {
    let g = critical_gamma();
    println!("critical gamma {g:.15} (2/sqrt3 - 1 = {:.15})", 2.0 / 3f64.sqrt() - 1.0);
    println!("complexity exponent bound 1 + gamma = {:.6}", 1.0 + g);
    for gamma in [0.05, 0.1, 0.15, 0.16, 0.2] {
        println!("gamma {gamma:.2}: feasible {:<5} beam width at n = 10^6: {:.3e}", feasible(gamma, 0.0), beam_width(1_000_000, gamma, 2.0));
    }
}
