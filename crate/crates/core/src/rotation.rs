//! Continued fractions and hitting times for circle rotations `x ↦ x + α mod 1`.

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

#[derive(Debug, thiserror::Error)]
pub enum RotationError {
    #[error("alpha = {0} must lie in (0, 1)")]
    AlphaOutOfRange(f64),
    #[error("depth must be at least 1")]
    ZeroDepth,
    #[error("mu = {0} must lie in (0, 0.5)")]
    MuOutOfRange(f64),
    #[error("expansion too shallow for mu = {mu}: deepest denominator is {deepest}, expand further")]
    TooShallow { mu: f64, deepest: u128 },
    #[error("cap must be at least 1")]
    ZeroCap,
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Expansion `α = [0; a_1, a_2, …]` with convergents `p_n / q_n`.
///
/// `p[0] = 0`, `q[0] = 1`, and `p[n]/q[n]` is the n-th convergent. The
/// expansion of an `f64` is exact (the float is a dyadic rational) but stops
/// once a convergent is as close to `α` as the float's own rounding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuedFraction {
    pub alpha: f64,
    /// `a_1, a_2, …`.
    pub partial_quotients: Vec<u128>,
    pub p: Vec<u128>,
    pub q: Vec<u128>,
    /// Stopped before the requested depth (rational input, precision
    /// exhausted, or 128-bit overflow).
    pub truncated: bool,
    #[serde(skip)]
    exact: Option<(BigInt, BigInt)>,
}

impl ContinuedFraction {
    /// Number of computed levels after `q_0`.
    pub fn depth(&self) -> usize {
        self.partial_quotients.len()
    }

    /// `||q_n α||`, the distance from `q_n α` to the nearest integer, which
    /// for convergents is `|q_n α − p_n|`. Computed exactly.
    pub fn residual(&self, n: usize) -> f64 {
        match &self.exact {
            Some((num, den)) => {
                let r = (BigInt::from(self.q[n]) * num - BigInt::from(self.p[n]) * den).abs();
                ratio_to_f64(&r, den)
            }
            None => (self.q[n] as f64 * self.alpha - self.p[n] as f64).abs(),
        }
    }
}

fn ratio_to_f64(num: &BigInt, den: &BigInt) -> f64 {
    let shift = den.bits().saturating_sub(960);
    let (n, d) = (num >> shift, den >> shift);
    n.to_f64().unwrap_or(f64::INFINITY) / d.to_f64().unwrap_or(f64::INFINITY)
}

/// The exact value of a finite `f64` as `num / den`.
fn f64_to_ratio(x: f64) -> (BigInt, BigInt) {
    let bits = x.to_bits();
    let exp = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    let (mant, e) = if exp == 0 { (frac, -1074) } else { (frac | (1u64 << 52), exp - 1075) };
    let sign = if x < 0.0 { Sign::Minus } else { Sign::Plus };
    let m = BigInt::from_biguint(sign, mant.into());
    if e >= 0 {
        (m << e as usize, BigInt::one())
    } else {
        let (m, d) = (m, BigInt::one() << (-e) as usize);
        let g = m.gcd(&d);
        (m / &g, d / g)
    }
}

/// Expand `α ∈ (0, 1)` to at most `depth` partial quotients.
pub fn cf_expand(alpha: f64, depth: usize) -> Result<ContinuedFraction, RotationError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(RotationError::AlphaOutOfRange(alpha));
    }
    let (num, den) = f64_to_ratio(alpha);
    // ||q α|| below this is indistinguishable from zero for an f64 input.
    let resolution = 4.0 * f64::EPSILON;
    expand(alpha, num, den, depth, |q, residual| residual <= resolution * (q as f64) * alpha.max(0.5))
}

/// Expand an exact rational `num / den ∈ (0, 1)`; stops only when the
/// expansion terminates, overflows, or reaches `depth`.
pub fn cf_expand_exact(num: &BigInt, den: &BigInt, depth: usize) -> Result<ContinuedFraction, RotationError> {
    let alpha = ratio_to_f64(num, den);
    if !(num.is_positive() && num < den) {
        return Err(RotationError::AlphaOutOfRange(alpha));
    }
    expand(alpha, num.clone(), den.clone(), depth, |_, _| false)
}

fn expand(
    alpha: f64,
    num: BigInt,
    den: BigInt,
    depth: usize,
    exhausted: impl Fn(u128, f64) -> bool,
) -> Result<ContinuedFraction, RotationError> {
    if depth == 0 {
        return Err(RotationError::ZeroDepth);
    }
    let mut cf = ContinuedFraction {
        alpha,
        partial_quotients: Vec::new(),
        p: vec![0],
        q: vec![1],
        truncated: false,
        exact: Some((num.clone(), den.clone())),
    };
    // Euclid on (den, num): α = num/den, 1/α = den/num.
    let (mut a, mut b) = (den, num);
    let (mut p_prev, mut q_prev) = (1u128, 0u128);
    while cf.depth() < depth {
        if b.is_zero() {
            cf.truncated = true;
            break;
        }
        let (quot, rem) = a.div_rem(&b);
        let Some(ai) = quot.to_u128() else {
            cf.truncated = true;
            break;
        };
        let (p, q) = (*cf.p.last().unwrap(), *cf.q.last().unwrap());
        let next = ai
            .checked_mul(p)
            .and_then(|x| x.checked_add(p_prev))
            .zip(ai.checked_mul(q).and_then(|x| x.checked_add(q_prev)));
        let Some((p_new, q_new)) = next else {
            cf.truncated = true;
            break;
        };
        cf.partial_quotients.push(ai);
        cf.p.push(p_new);
        cf.q.push(q_new);
        (p_prev, q_prev) = (p, q);
        (a, b) = (b, rem);
        let n = cf.depth();
        if cf.depth() < depth && exhausted(q_new, cf.residual(n)) {
            cf.truncated = true;
            break;
        }
    }
    Ok(cf)
}

/// `2 q_{n+1} q_n` for the least `n` with `1/q_{n+1} < μ`.
pub fn hitting_bound(cf: &ContinuedFraction, mu: f64) -> Result<u128, RotationError> {
    check_mu(mu)?;
    for n in 0..cf.depth() {
        let next = cf.q[n + 1];
        if 1.0 / (next as f64) < mu {
            return Ok(2 * next * cf.q[n]);
        }
    }
    Err(RotationError::TooShallow { mu, deepest: *cf.q.last().unwrap() })
}

fn check_mu(mu: f64) -> Result<(), RotationError> {
    if mu > 0.0 && mu < 0.5 {
        Ok(())
    } else {
        Err(RotationError::MuOutOfRange(mu))
    }
}

/// Sorted orbit points on the circle and the multiset of gaps between them.
#[derive(Debug, Clone)]
pub struct OrbitGaps {
    alpha: f64,
    steps: u64,
    points: BTreeSet<u64>,
    gaps: BTreeMap<u64, usize>,
}

/// Circle positions in `[0, 1)` compare like their bit patterns.
fn key(x: f64) -> u64 {
    x.to_bits()
}

fn val(k: u64) -> f64 {
    f64::from_bits(k)
}

impl OrbitGaps {
    /// The orbit `{0}` before any rotation.
    pub fn new(alpha: f64) -> Self {
        let mut points = BTreeSet::new();
        points.insert(key(0.0));
        let mut gaps = BTreeMap::new();
        gaps.insert(key(1.0), 1);
        OrbitGaps { alpha, steps: 0, points, gaps }
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn max_gap(&self) -> f64 {
        self.gaps.keys().next_back().map_or(1.0, |&k| val(k))
    }

    /// Gap lengths in increasing order, with multiplicity.
    pub fn gaps(&self) -> Vec<f64> {
        self.gaps.iter().flat_map(|(&k, &c)| std::iter::repeat_n(val(k), c)).collect()
    }

    fn remove_gap(&mut self, g: f64) {
        let k = key(g);
        let c = self.gaps.get_mut(&k).expect("gap present");
        *c -= 1;
        if *c == 0 {
            self.gaps.remove(&k);
        }
    }

    fn add_gap(&mut self, g: f64) {
        *self.gaps.entry(key(g)).or_insert(0) += 1;
    }

    /// Apply the rotation once more and insert the new point.
    pub fn step(&mut self) {
        self.steps += 1;
        let x = (self.steps as f64 * self.alpha).fract();
        let k = key(x);
        if !self.points.insert(k) {
            return;
        }
        let first = *self.points.iter().next().unwrap();
        let last = *self.points.iter().next_back().unwrap();
        let prev = self.points.range(..k).next_back().copied().unwrap_or(last);
        let next = self.points.range(k + 1..).next().copied().unwrap_or(first);
        let circ = |a: u64, b: u64| {
            let d = val(b) - val(a);
            if d <= 0.0 {
                d + 1.0
            } else {
                d
            }
        };
        self.remove_gap(circ(prev, next));
        self.add_gap(circ(prev, k));
        self.add_gap(circ(k, next));
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HittingTime {
    Resolved(u64),
    Unresolved { cap: u64 },
}

impl HittingTime {
    pub fn resolved(self) -> Option<u64> {
        match self {
            HittingTime::Resolved(k) => Some(k),
            HittingTime::Unresolved { .. } => None,
        }
    }
}

/// Least `k` such that `{0, α, …, kα}` leaves no gap of length `≥ μ`.
pub fn hitting_exact(alpha: f64, mu: f64, cap: u64) -> Result<HittingTime, RotationError> {
    check_mu(mu)?;
    if cap < 1 {
        return Err(RotationError::ZeroCap);
    }
    let mut orbit = OrbitGaps::new(alpha);
    while orbit.steps() < cap {
        orbit.step();
        if orbit.max_gap() < mu {
            return Ok(HittingTime::Resolved(orbit.steps()));
        }
    }
    Ok(HittingTime::Unresolved { cap })
}

/// `(n, ln q_n / n)` for every computed level `n ≥ 1`.
pub fn denominator_growth_rates(cf: &ContinuedFraction) -> Vec<(usize, f64)> {
    (1..=cf.depth()).map(|n| (n, (cf.q[n] as f64).ln() / n as f64)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HittingResult {
    pub mu: f64,
    pub exact: Option<u64>,
    pub bound: u128,
}

impl HittingResult {
    pub fn compute(cf: &ContinuedFraction, mu: f64, cap: u64) -> Result<Self, RotationError> {
        let bound = hitting_bound(cf, mu)?;
        let exact = hitting_exact(cf.alpha, mu, cap)?.resolved();
        Ok(HittingResult { mu, exact, bound })
    }

    /// `exact · μ^{2+ε}`, the quantity that stays bounded for typical α.
    pub fn scaled(&self, epsilon: f64) -> Option<f64> {
        self.exact.map(|k| k as f64 * self.mu.powf(2.0 + epsilon))
    }
}

/// `mu,L_exact,L_bound` rows; unresolved hitting times are empty cells.
pub fn write_hitting_csv<W: Write>(rows: &[HittingResult], out: W) -> Result<(), RotationError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["mu", "L_exact", "L_bound"])?;
    for r in rows {
        w.write_record([
            r.mu.to_string(),
            r.exact.map(|k| k.to_string()).unwrap_or_default(),
            r.bound.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn golden() -> f64 {
        (5f64.sqrt() - 1.0) / 2.0
    }

    #[test]
    fn golden_is_fibonacci() {
        let cf = cf_expand(golden(), 30).unwrap();
        assert!(cf.partial_quotients.iter().all(|&a| a == 1));
        assert_eq!(&cf.q[..8], &[1, 1, 2, 3, 5, 8, 13, 21]);
        for n in 2..cf.q.len() {
            assert_eq!(cf.q[n], cf.q[n - 1] + cf.q[n - 2]);
        }
        assert!(!cf.truncated);
    }

    #[test]
    fn one_third_truncates() {
        let cf = cf_expand(1.0 / 3.0, 10).unwrap();
        assert_eq!(cf.partial_quotients, vec![3]);
        assert!(cf.truncated);
    }

    #[test]
    fn exact_rational_terminates() {
        let cf = cf_expand_exact(&BigInt::from(13), &BigInt::from(30), 10).unwrap();
        assert_eq!(cf.partial_quotients, vec![2, 3, 4]);
        assert_eq!(cf.q.last(), Some(&30));
        assert_eq!(cf.p.last(), Some(&13));
        assert!(cf.truncated);
    }

    #[test]
    fn golden_bounds() {
        let cf = cf_expand(golden(), 30).unwrap();
        assert_eq!(hitting_bound(&cf, 0.1).unwrap(), 208);
        assert_eq!(hitting_bound(&cf, 0.4).unwrap(), 12);
        let shallow = cf_expand(golden(), 2).unwrap();
        assert!(matches!(hitting_bound(&shallow, 0.01), Err(RotationError::TooShallow { .. })));
        assert!(matches!(hitting_bound(&cf, 0.5), Err(RotationError::MuOutOfRange(_))));
    }

    #[test]
    fn golden_exact_hitting() {
        assert_eq!(hitting_exact(golden(), 0.4, 100).unwrap(), HittingTime::Resolved(2));
        let k = hitting_exact(golden(), 0.1, 1000).unwrap().resolved().unwrap();
        assert!(k <= 208);
        assert_eq!(hitting_exact(golden(), 0.001, 5).unwrap(), HittingTime::Unresolved { cap: 5 });
        assert!(matches!(hitting_exact(golden(), 0.1, 0), Err(RotationError::ZeroCap)));
    }

    #[test]
    fn gaps_sum_to_one() {
        let mut o = OrbitGaps::new(0.3271);
        for _ in 0..50 {
            o.step();
        }
        let total: f64 = o.gaps().iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert_eq!(o.gaps().len(), o.len());
    }

    #[test]
    fn golden_denominator_growth_limit() {
        let cf = cf_expand(golden(), 60).unwrap();
        let d = denominator_growth_rates(&cf);
        let (n, v) = *d.last().unwrap();
        assert!(n >= 30);
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((v - phi.ln()).abs() < 0.02, "{v}");
    }

    #[test]
    fn residual_is_exact_for_deep_levels() {
        let cf = cf_expand(golden(), 60).unwrap();
        for n in 1..cf.depth() {
            assert!(cf.residual(n) < cf.residual(n - 1));
        }
    }

    #[test]
    fn csv_rows() {
        let rows = [
            HittingResult { mu: 0.25, exact: Some(3), bound: 12 },
            HittingResult { mu: 0.125, exact: None, bound: 80 },
        ];
        let mut buf = Vec::new();
        write_hitting_csv(&rows, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "mu,L_exact,L_bound\n0.25,3,12\n0.125,,80\n");
    }
}
