//! Fit log P_n against log n for a rational and an irrational triangle.

use billiard_complexity::partition::{critical_gamma, fit_growth_exponent};
use billiard_complexity::unfolding::{ComplexityCensus, Counting, EnumerationOptions};
use billiard_complexity::RightTriangle;

fn main() {
    for angle in [std::f64::consts::PI / 4.0, std::f64::consts::PI / 5.0, 0.6627] {
        let t = RightTriangle::new(angle, 1.0).expect("acute angle");
        let census = ComplexityCensus::build(&t.table(), 40, EnumerationOptions::default()).expect("within budget");
        let fit = fit_growth_exponent((8..=40).map(|n| (n, census.p(n, Counting::Unoriented) as f64))).expect("enough points");
        println!("angle {angle:.4}: exponent {:.3}, r^2 {:?}", fit.exponent, fit.r_squared);
    }
    println!("typical-angle bound 1 + gamma_crit = {:.4}", 1.0 + critical_gamma());
}
