//! How long a circle rotation takes to become μ-dense, against the
//! continued-fraction bound.

use billiard_complexity::rotation::{cf_expand, HittingResult};

fn main() {
    for (name, alpha) in [("golden", (5f64.sqrt() - 1.0) / 2.0), ("sqrt2 - 1", 2f64.sqrt() - 1.0), ("e - 2", std::f64::consts::E - 2.0)] {
        let cf = cf_expand(alpha, 40).expect("alpha in (0, 1)");
        println!("{name}: partial quotients {:?}", &cf.partial_quotients[..10.min(cf.partial_quotients.len())]);
        for k in [3, 6, 10, 14] {
            let mu = 0.5f64.powi(k);
            let r = HittingResult::compute(&cf, mu, 10_000_000).expect("deep enough expansion");
            println!("  mu = 2^-{k:<2} L = {:>8?} bound = {}", r.exact, r.bound);
        }
    }
}
