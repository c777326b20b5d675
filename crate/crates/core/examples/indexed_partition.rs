//! Diagonal directions from one vertex, labelled by their reflection count.

use billiard_complexity::partition::{build_partition, partition_diameter};
use billiard_complexity::unfolding::{propagate_beams, EnumerationOptions};
use billiard_complexity::{Angle, Rhombus};

fn main() {
    let table = Rhombus::with_angle(Angle::new(1.17).expect("angle in (0, π)")).table();
    let en = propagate_beams(&table, 0, 12, EnumerationOptions::default()).expect("within budget");
    let angle = Angle::new(table.vertex_angle(0)).expect("vertex angle");
    for n in [2, 4, 8, 12] {
        let diags: Vec<_> = en.diagonals.iter().filter(|d| d.reflections <= n).cloned().collect();
        let p = build_partition(&diags, angle, n).expect("directions inside the angle");
        println!("n = {n:>2}: {:>4} cut points, diameter {:.4}", p.len(), partition_diameter(&p));
    }
    let p = build_partition(&en.diagonals, angle, 12).expect("directions inside the angle");
    let mut out = std::io::stdout().lock();
    p.restrict(3).write_csv(&mut out).expect("stdout");
}
