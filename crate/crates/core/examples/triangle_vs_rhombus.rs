//! Fold rhombus diagonals back into the triangle and compare counts.

use billiard_complexity::unfolding::{triangle_complexity_bound_check, EnumerationOptions};
use billiard_complexity::RightTriangle;

fn main() {
    let t = RightTriangle::new(0.9, 1.0).expect("acute angle");
    println!("{:>3} {:>8} {:>8} {:>8} {:>8}", "n", "rhombus", "folded", "direct", "images");
    for n in 0..=10 {
        let c = triangle_complexity_bound_check(&t, n, EnumerationOptions::default()).expect("within budget");
        println!(
            "{n:>3} {:>8} {:>8} {:>8} {:>8}",
            c.p_rhombus_n, c.p_triangle_3n, c.p_triangle_3n_direct, c.fold.distinct_images
        );
    }
}
