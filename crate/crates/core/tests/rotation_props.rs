mod common;

use billiard_complexity::rotation::{cf_expand, hitting_bound, hitting_exact, HittingTime, OrbitGaps};
use proptest::prelude::*;
use rand::Rng;

/// Largest circular gap of `{0, α, …, kα}` by sorting.
fn brute_max_gap(alpha: f64, k: u64) -> f64 {
    let mut xs: Vec<f64> = (0..=k).map(|j| (j as f64 * alpha).fract()).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let wrap = 1.0 - xs.last().unwrap() + xs[0];
    xs.windows(2).map(|w| w[1] - w[0]).fold(wrap, f64::max)
}

#[test]
fn denominators_sandwich_the_residuals() {
    for seed in 0..20 {
        let alpha: f64 = common::rng(seed).gen_range(0.0..1.0);
        let cf = cf_expand(alpha, 25).unwrap();
        for n in 0..cf.depth().min(25) {
            let r = cf.residual(n);
            let next = cf.q[n + 1] as f64;
            assert!(1.0 / (2.0 * next) < r && r < 1.0 / next, "alpha {alpha} level {n}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn exact_hitting_time_is_below_the_bound(alpha in 0.001f64..0.999, e in 3i32..11) {
        let mu = 0.5f64.powi(e);
        let cf = cf_expand(alpha, 60).unwrap();
        let bound = hitting_bound(&cf, mu);
        if let (Ok(b), HittingTime::Resolved(k)) = (bound, hitting_exact(alpha, mu, 10_000_000).unwrap()) {
            prop_assert!(k as u128 <= b, "k {} bound {}", k, b);
        }
    }

    #[test]
    fn hitting_time_matches_sorting(alpha in 0.01f64..0.99, mu in 0.02f64..0.4) {
        if let HittingTime::Resolved(k) = hitting_exact(alpha, mu, 5000).unwrap() {
            prop_assert!(brute_max_gap(alpha, k) < mu);
            prop_assert!(brute_max_gap(alpha, k - 1) >= mu);
        }
    }

    /// At most three gap lengths, the largest the sum of the other two.
    #[test]
    fn three_gap_structure(alpha in 0.001f64..0.999, k in 1u64..400) {
        let mut orbit = OrbitGaps::new(alpha);
        for _ in 0..k {
            orbit.step();
        }
        let mut gaps = orbit.gaps();
        gaps.sort_by(f64::total_cmp);
        let mut distinct: Vec<f64> = Vec::new();
        for g in gaps {
            if distinct.last().is_none_or(|l| g - l > 1e-9) {
                distinct.push(g);
            }
        }
        prop_assert!(distinct.len() <= 3, "{:?}", distinct);
        if distinct.len() == 3 {
            prop_assert!((distinct[2] - distinct[0] - distinct[1]).abs() < 1e-9);
        }
        prop_assert!((orbit.max_gap() - brute_max_gap(alpha, k)).abs() < 1e-12);
    }
}
