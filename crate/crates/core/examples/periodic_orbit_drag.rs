//! Find a periodic orbit inside a beam, fold it into the rhombus, and drag
//! it sideways until it runs into a vertex.

use billiard_complexity::devmap::{
    certificate_to_billiard_orbit, drag_orbit, find_periodic_in_beam, BeamInterval, BeamSearch, DragOutcome,
    RotatedFamily, VertexPair,
};
use billiard_complexity::{Angle, Rhombus};

fn main() {
    let fam = RotatedFamily::new(Rhombus::with_angle(Angle::new(0.97).expect("angle")), VertexPair::Horizontal);
    for (k, &side) in fam.left_facing(0).iter().enumerate() {
        let beam = BeamInterval::around(&fam, 0, side, (0.3 + 0.2 * k as f64) * fam.side_length(), 0.01).expect("inside");
        let cert = match find_periodic_in_beam(&fam, &beam, 100_000).expect("valid beam") {
            BeamSearch::Found { certificate, .. } => certificate,
            other => {
                println!("side {side}: {other:?}");
                continue;
            }
        };
        println!("side {side}: period {} between images {} and {}, residual {:.1e}", cert.period, cert.p, cert.q, cert.closure_residual);
        let table = fam.base().table();
        let orbit = certificate_to_billiard_orbit(&fam, &cert).expect("even period");
        println!("  itinerary {}", orbit.itinerary);
        match drag_orbit(&table, &orbit, 1e-3, 1_000_000).expect("closed orbit") {
            DragOutcome::VertexEncounter { vertex, drags, offset, diagonal, .. } => println!(
                "  vertex {vertex} met after {drags} drags (offset {offset:.6}); diagonal {} -> {} with {} reflections",
                diagonal.source, diagonal.target, diagonal.reflections
            ),
            DragOutcome::Completed { drags, .. } => println!("  no vertex after {drags} drags"),
        }
    }
}
