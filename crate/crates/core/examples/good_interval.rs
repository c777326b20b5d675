//! Find a long interval with large endpoint indices in a synthetic partition.

use billiard_complexity::partition::{find_good_interval, synthetic_partition};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let (n, gamma, c) = (20_000, 0.1, 2.0);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let p = synthetic_partition(n, gamma, c, &mut rng);
    println!("{} cut points at level {n}", p.len());
    match find_good_interval(&p, gamma, c).expect("valid parameters") {
        Ok(s) => {
            let i = s.interval;
            println!("interval [{:.6}, {:.6}], length {:.3e} > {:.3e}", i.left, i.right, i.length(), s.length_floor);
            println!("indices {} and {} > {:.1}", i.left_index, i.right_index, s.index_floor);
            println!("{:?}", s.stats);
        }
        Err(reason) => println!("not found: {reason:?}"),
    }
}
