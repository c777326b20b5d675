//! Push a thin beam through the rotated rhombi and watch its levels.

use billiard_complexity::devmap::{evolve_interval, lambda_measure, BeamInterval, Evolution, RotatedFamily, VertexPair};
use billiard_complexity::{Angle, Rhombus};

fn main() {
    let fam = RotatedFamily::new(Rhombus::with_angle(Angle::new(1.234).expect("angle")), VertexPair::Horizontal);
    let side = fam.left_facing(0)[0];
    let beam = BeamInterval::around(&fam, 0, side, 0.4 * fam.side_length(), 1e-6).expect("inside the side");
    let ev = evolve_interval(&fam, &beam, 60).expect("left-facing side");
    let levels: Vec<i64> = ev.images().iter().map(|i| i.level).collect();
    println!("levels {levels:?}");
    let m = lambda_measure(&fam, &beam);
    let drift = ev.images().iter().map(|i| (lambda_measure(&fam, i) - m).abs()).fold(0.0, f64::max);
    println!("measure {m:.3e}, largest drift {drift:.1e}");
    if let Evolution::Split { event, .. } = ev {
        println!("split at step {} on vertex {}", event.at_step, event.vertex);
    }
}
