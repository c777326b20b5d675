mod common;

use billiard_complexity::partition::build_partition;
use billiard_complexity::unfolding::{
    propagate_beams, trace_orbit, ComplexityCensus, Counting, EnumerationOptions, TraceOutcome,
};
use billiard_complexity::{Angle, Point2, Rhombus, RightTriangle};
use proptest::prelude::*;
use rand::Rng;
use std::f64::consts::{FRAC_PI_2, PI};

fn opts() -> EnumerationOptions {
    EnumerationOptions::default()
}

#[test]
fn square_counts_match_direction_scan() {
    let table = Rhombus::with_angle(Angle::new(FRAC_PI_2).unwrap()).table();
    let en = propagate_beams(&table, 0, 5, opts()).unwrap();
    let scan = common::scan_diagonals(&table, 0, 5, 20_000);
    assert_eq!(en.diagonals.len(), scan.len());
    for (d, s) in en.diagonals.iter().zip(&scan) {
        assert!((d.offset - s).abs() < 1e-9, "{} vs {}", d.offset, s);
    }
}

#[test]
fn triangle_counts_match_direction_scan() {
    let table = RightTriangle::new(0.61, 1.0).unwrap().table();
    for v in 0..3 {
        let en = propagate_beams(&table, v, 6, opts()).unwrap();
        assert_eq!(en.diagonals.len(), common::scan_diagonals(&table, v, 6, 20_000).len(), "vertex {v}");
    }
}

#[test]
fn beams_are_sound() {
    let table = common::seeded_rhombus(11).table();
    let en = propagate_beams(&table, 0, 6, opts()).unwrap();
    let mut rng = common::rng(5);
    for leaf in &en.leaves {
        let pick = |r: &mut rand_chacha::ChaCha8Rng| {
            let t = r.gen_range(0.05..0.95);
            table.sector_start(0).rotated(leaf.theta_lo + t * leaf.width())
        };
        let first = match trace_orbit(&table, table.vertex(0), pick(&mut rng), 6).unwrap() {
            TraceOutcome::Completed(t) => t.itinerary,
            TraceOutcome::VertexHit { .. } => panic!("vertex inside a leaf"),
        };
        for _ in 0..10 {
            match trace_orbit(&table, table.vertex(0), pick(&mut rng), 6).unwrap() {
                TraceOutcome::Completed(t) => assert_eq!(t.itinerary, first),
                TraceOutcome::VertexHit { .. } => panic!("vertex inside a leaf"),
            }
        }
    }
}

#[test]
fn leaves_and_diagonals_cover_the_angle() {
    let table = common::seeded_rhombus(4).table();
    let en = propagate_beams(&table, 1, 7, opts()).unwrap();
    let mut leaves: Vec<(f64, f64)> = en.leaves.iter().map(|l| (l.theta_lo, l.theta_hi)).collect();
    leaves.sort_by(|a, b| a.0.total_cmp(&b.0));
    assert!(leaves[0].0.abs() < 1e-12);
    assert!((leaves.last().unwrap().1 - table.vertex_angle(1)).abs() < 1e-12);
    for w in leaves.windows(2) {
        assert!((w[0].1 - w[1].0).abs() < 1e-12);
    }
    // Interior leaf endpoints are exactly the diagonal directions.
    let ends: Vec<f64> = leaves.iter().skip(1).map(|l| l.0).collect();
    assert_eq!(ends.len(), en.diagonals.len());
    for (e, d) in ends.iter().zip(&en.diagonals) {
        assert!((e - d.offset).abs() < 1e-12);
    }
}

#[test]
fn diagonals_traced_backward_reverse_their_itinerary() {
    let table = common::seeded_rhombus(21).table();
    let census = ComplexityCensus::build(&table, 6, opts()).unwrap();
    assert_eq!(census.unmatched, 0);
    for en in &census.per_vertex {
        for d in &en.diagonals {
            let back = Point2::from_angle(d.arrival_direction + PI);
            assert!(common::reaches_vertex(&table, d.target, back, d.reflections, d.source));
            let rev = match trace_orbit(&table, table.vertex(d.target), back, d.reflections + 1).unwrap() {
                TraceOutcome::VertexHit { vertex, trace, .. } => {
                    assert_eq!(vertex, d.source);
                    trace.itinerary
                }
                TraceOutcome::Completed(_) => panic!("reverse path misses the source"),
            };
            assert_eq!(rev, d.itinerary.reversed());
        }
    }
    // A path hitting a side at right angles retraces itself and is its own reversal.
    let self_reverse = census
        .per_vertex
        .iter()
        .flat_map(|e| &e.diagonals)
        .filter(|d| {
            let back = Point2::from_angle(d.arrival_direction + PI);
            d.source == d.target && back.dist(Point2::from_angle(d.direction)) < 1e-9
        })
        .count();
    assert_eq!(2 * census.p(6, Counting::Unoriented) - self_reverse, census.p(6, Counting::Oriented));
}

#[test]
fn diagonals_are_independently_verified() {
    let table = RightTriangle::new(0.9, 1.0).unwrap().table();
    let en = propagate_beams(&table, 2, 8, opts()).unwrap();
    for d in &en.diagonals {
        assert!(common::reaches_vertex(&table, 2, Point2::from_angle(d.direction), d.reflections, d.target));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn partition_refines_with_level(angle in 0.3f64..2.8, n in 1usize..15) {
        let table = Rhombus::with_angle(Angle::new(angle).unwrap()).table();
        let en = propagate_beams(&table, 0, n + 1, opts()).unwrap();
        let a = Angle::new(table.vertex_angle(0)).unwrap();
        let at = |k: usize| {
            let ds: Vec<_> = en.diagonals.iter().filter(|d| d.reflections <= k).cloned().collect();
            build_partition(&ds, a, k).unwrap()
        };
        let (coarse, fine) = (at(n), at(n + 1));
        for (t, i) in coarse.cut_points().iter().zip(coarse.indices()) {
            let k = fine.cut_points().partition_point(|x| *x < t - 1e-12);
            prop_assert!((fine.cut_points()[k] - t).abs() <= 1e-12);
            prop_assert_eq!(fine.indices()[k], *i);
        }
    }

    #[test]
    fn q_is_monotone_and_bounded_by_p(angle in 0.3f64..2.8) {
        let table = Rhombus::with_angle(Angle::new(angle).unwrap()).table();
        let census = ComplexityCensus::build(&table, 5, opts()).unwrap();
        for n in 0..5 {
            prop_assert!(census.q(0, n) <= census.q(0, n + 1));
            prop_assert!(census.q(0, n) <= census.p(n, Counting::Oriented));
        }
    }
}
