mod common;

use billiard_complexity::devmap::{
    certificate_to_billiard_orbit, dev_step, evolve_interval, find_periodic_in_beam, inverse_step, lambda_measure, BeamInterval, BeamSearch,
    DevPoint, DevStep, Evolution, PeriodicOrbit, RotatedFamily, VertexPair,
};
use billiard_complexity::{Angle, Rhombus};
use proptest::prelude::*;

fn family(angle: f64, vertical: bool) -> RotatedFamily {
    let pair = if vertical { VertexPair::Vertical } else { VertexPair::Horizontal };
    RotatedFamily::new(Rhombus::with_angle(Angle::new(angle).unwrap()), pair)
}

fn point(fam: &RotatedFamily, level: i64, pick: bool, t: f64) -> DevPoint {
    let sides = fam.left_facing(level);
    DevPoint { level, side: sides[pick as usize % sides.len()], s: t * fam.side_length() }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn inverse_undoes_a_step(angle in 0.3f64..2.8, vertical: bool, level in -50i64..50, pick: bool, t in 0.01f64..0.99) {
        let fam = family(angle, vertical);
        let x = point(&fam, level, pick, t);
        if let DevStep::Moved { point: y, level_delta } = dev_step(&fam, x).unwrap() {
            prop_assert_eq!(level_delta.abs(), 1);
            prop_assert_eq!(y.level - x.level, level_delta);
            match inverse_step(&fam, y).unwrap() {
                DevStep::Moved { point: z, .. } => {
                    prop_assert_eq!(z.level, x.level);
                    prop_assert_eq!(z.side, x.side);
                    prop_assert!((z.s - x.s).abs() < 1e-10);
                }
                DevStep::VertexHit { .. } => prop_assert!(false, "inverse met a vertex"),
            }
        }
    }

    #[test]
    fn images_keep_their_vertical_measure(angle in 0.3f64..2.8, pick: bool, t in 0.05f64..0.95, e in 3i32..8) {
        let fam = family(angle, false);
        let x = point(&fam, 0, pick, t);
        let i = BeamInterval::around(&fam, 0, x.side, x.s, 10f64.powi(-e)).unwrap();
        let m = lambda_measure(&fam, &i);
        let ev = evolve_interval(&fam, &i, 200).unwrap();
        let mut level = i.level;
        for img in ev.images() {
            prop_assert!((lambda_measure(&fam, img) - m).abs() < 1e-12);
            prop_assert!((img.mu - m).abs() < 1e-12);
            prop_assert_eq!((img.level - level).abs(), 1);
            level = img.level;
        }
        if let Evolution::Split { event, .. } = ev {
            prop_assert!(event.fraction > 0.0 && event.fraction < 1.0);
        }
    }

    #[test]
    fn certificates_close_up(angle in 0.3f64..2.8, pick: bool, t in 0.1f64..0.9, e in 1.5f64..3.0) {
        let fam = family(angle, false);
        let x = point(&fam, 0, pick, t);
        let i = BeamInterval::around(&fam, 0, x.side, x.s, 10f64.powf(-e)).unwrap();
        if let BeamSearch::Found { certificate, steps } = find_periodic_in_beam(&fam, &i, 20_000).unwrap() {
            prop_assert_eq!(certificate.period % 2, 0);
            prop_assert_eq!(steps, certificate.q);
            prop_assert!(certificate.closure_residual < 1e-9 * certificate.orbit_length);
            let folded = certificate_to_billiard_orbit(&fam, &certificate).unwrap();
            let replay =
                PeriodicOrbit::from_start(&fam.base().table(), folded.start, folded.direction, certificate.period).unwrap();
            prop_assert!(replay.is_closed(1e-9));
        }
    }
}
