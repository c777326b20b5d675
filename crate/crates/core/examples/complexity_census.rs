//! Count generalized diagonals of a right triangle and of a rhombus.

use billiard_complexity::unfolding::{ComplexityCensus, Counting, EnumerationOptions};
use billiard_complexity::{triangle_to_rhombus, RightTriangle};

fn main() {
    let triangle = RightTriangle::new(0.83, 1.0).expect("acute angle");
    let rhombus = triangle_to_rhombus(&triangle);
    let opts = EnumerationOptions::default();
    let t = ComplexityCensus::build(&triangle.table(), 24, opts).expect("within budget");
    let r = ComplexityCensus::build(&rhombus.table(), 24, opts).expect("within budget");
    println!("{:>3} {:>10} {:>10} {:>10}", "n", "Q_n(v0)", "P_n tri", "P_n rho");
    for n in (0..=24).step_by(4) {
        println!("{n:>3} {:>10} {:>10} {:>10}", t.q(0, n), t.p(n, Counting::Unoriented), r.p(n, Counting::Unoriented));
    }
}
