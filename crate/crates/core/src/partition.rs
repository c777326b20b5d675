//! Indexed partitions of the normalized direction interval `[0, 1]`.
//!
//! Directions of generalized diagonals from a fixed vertex, divided by the
//! vertex angle, cut `[0, 1]` into intervals. Each cut point carries the
//! reflection count of its diagonal as its index.

use crate::unfolding::GeneralizedDiagonal;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::io::{BufRead, Write};

#[derive(Debug, thiserror::Error)]
pub enum PartitionError {
    #[error("diagonal direction offset {offset} lies outside the vertex angle {angle}")]
    DirectionOutsideAngle { offset: f64, angle: f64 },
    #[error("diagonals emanate from more than one vertex ({0} and {1})")]
    MixedSources(usize, usize),
    #[error("diagonal with {reflections} reflections exceeds partition level {n}")]
    IndexAboveLevel { reflections: usize, n: usize },
    #[error("cut points must be strictly increasing inside (0, 1) with one index each")]
    Malformed,
    #[error("parameter {name} = {value} must be positive and finite")]
    BadParameter { name: &'static str, value: f64 },
    #[error("fit needs at least 5 points with n >= 1 and P_n >= 1")]
    InsufficientData,
    #[error("partition file is malformed: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Cut points in `(0, 1)` with their indices, at level `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexedPartition {
    n: usize,
    cut_points: Vec<f64>,
    indices: Vec<usize>,
    vertex_angle: Option<f64>,
}

/// Two diagonal directions closer than this (normalized) are the same cut.
pub const MERGE_TOLERANCE: f64 = 1e-12;

impl IndexedPartition {
    pub fn new(n: usize, cut_points: Vec<f64>, indices: Vec<usize>) -> Result<Self, PartitionError> {
        let ok = cut_points.len() == indices.len()
            && cut_points.iter().all(|&t| t > 0.0 && t < 1.0)
            && cut_points.windows(2).all(|w| w[0] < w[1]);
        if !ok {
            return Err(PartitionError::Malformed);
        }
        Ok(IndexedPartition { n, cut_points, indices, vertex_angle: None })
    }

    pub fn empty(n: usize) -> Self {
        IndexedPartition { n, cut_points: Vec::new(), indices: Vec::new(), vertex_angle: None }
    }

    pub fn with_vertex_angle(mut self, angle: f64) -> Self {
        self.vertex_angle = Some(angle);
        self
    }

    pub fn level(&self) -> usize {
        self.n
    }

    pub fn cut_points(&self) -> &[f64] {
        &self.cut_points
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn vertex_angle(&self) -> Option<f64> {
        self.vertex_angle
    }

    pub fn len(&self) -> usize {
        self.cut_points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cut_points.is_empty()
    }

    /// The partition at a lower level: cut points with index at most `level`.
    pub fn restrict(&self, level: usize) -> IndexedPartition {
        let (cut_points, indices) = self
            .cut_points
            .iter()
            .zip(&self.indices)
            .filter(|(_, &i)| i <= level)
            .map(|(&t, &i)| (t, i))
            .unzip();
        IndexedPartition { n: level, cut_points, indices, vertex_angle: self.vertex_angle }
    }

    /// Interval endpoints `0, t_1, …, t_k, 1`.
    pub fn boundaries(&self) -> Vec<f64> {
        let mut b = Vec::with_capacity(self.len() + 2);
        b.push(0.0);
        b.extend_from_slice(&self.cut_points);
        b.push(1.0);
        b
    }

    /// Index of the cut point at `t`, if any.
    pub fn index_at(&self, t: f64) -> Option<usize> {
        let i = self.cut_points.partition_point(|&c| c < t - MERGE_TOLERANCE);
        (i < self.len() && (self.cut_points[i] - t).abs() <= MERGE_TOLERANCE).then(|| self.indices[i])
    }

    /// `# n=…,vertex_angle=…` followed by `cut_point,index` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<(), PartitionError> {
        match self.vertex_angle {
            Some(a) => writeln!(out, "# n={},vertex_angle={}", self.n, a)?,
            None => writeln!(out, "# n={}", self.n)?,
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["cut_point", "index"])?;
        for (t, i) in self.cut_points.iter().zip(&self.indices) {
            w.write_record([t.to_string(), i.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: BufRead>(mut input: R) -> Result<Self, PartitionError> {
        let mut header = String::new();
        input.read_line(&mut header)?;
        let header = header
            .trim()
            .strip_prefix('#')
            .ok_or_else(|| PartitionError::Parse("missing '# n=' header".into()))?;
        let mut n = None;
        let mut angle = None;
        for kv in header.split(',') {
            let (k, v) = kv.trim().split_once('=').ok_or_else(|| PartitionError::Parse(kv.into()))?;
            match k {
                "n" => n = Some(v.parse::<usize>().map_err(|e| PartitionError::Parse(e.to_string()))?),
                "vertex_angle" => {
                    angle = Some(v.parse::<f64>().map_err(|e| PartitionError::Parse(e.to_string()))?)
                }
                other => return Err(PartitionError::Parse(format!("unknown key {other}"))),
            }
        }
        let n = n.ok_or_else(|| PartitionError::Parse("missing n".into()))?;
        let mut r = csv::Reader::from_reader(input);
        let mut cuts = Vec::new();
        let mut idx = Vec::new();
        for rec in r.deserialize::<(f64, usize)>() {
            let (t, i) = rec?;
            cuts.push(t);
            idx.push(i);
        }
        let p = IndexedPartition::new(n, cuts, idx)?;
        Ok(match angle {
            Some(a) => p.with_vertex_angle(a),
            None => p,
        })
    }
}

/// Normalize diagonal directions by the vertex angle and sort them into a
/// partition at level `n`. Coincident directions keep the smaller index.
pub fn build_partition(
    diagonals: &[GeneralizedDiagonal],
    vertex_angle: crate::geometry::Angle,
    n: usize,
) -> Result<IndexedPartition, PartitionError> {
    let angle = vertex_angle.radians();
    let mut pts: Vec<(f64, usize)> = Vec::with_capacity(diagonals.len());
    let mut source = None;
    for d in diagonals {
        match source {
            None => source = Some(d.source),
            Some(s) if s != d.source => return Err(PartitionError::MixedSources(s, d.source)),
            _ => {}
        }
        if d.reflections > n {
            return Err(PartitionError::IndexAboveLevel { reflections: d.reflections, n });
        }
        if !(d.offset > 0.0 && d.offset < angle) {
            return Err(PartitionError::DirectionOutsideAngle { offset: d.offset, angle });
        }
        pts.push((d.offset / angle, d.reflections));
    }
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut cut_points: Vec<f64> = Vec::with_capacity(pts.len());
    let mut indices: Vec<usize> = Vec::with_capacity(pts.len());
    for (t, i) in pts {
        match cut_points.last() {
            Some(&last) if t - last <= MERGE_TOLERANCE => {
                let li = indices.last_mut().expect("parallel vectors");
                *li = (*li).min(i);
            }
            _ => {
                cut_points.push(t);
                indices.push(i);
            }
        }
    }
    Ok(IndexedPartition { n, cut_points, indices, vertex_angle: Some(angle) })
}

/// Longest interval of the partition, counting the ends 0 and 1.
pub fn partition_diameter(p: &IndexedPartition) -> f64 {
    p.boundaries().windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
}

/// An interval of the partition between two cut points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GoodInterval {
    pub left: f64,
    pub right: f64,
    pub left_index: usize,
    pub right_index: usize,
}

impl GoodInterval {
    pub fn length(&self) -> f64 {
        self.right - self.left
    }

    pub fn min_index(&self) -> usize {
        self.left_index.min(self.right_index)
    }
}

/// Sizes of the intermediate sets built during the search.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SelectionStats {
    /// Grid cells of width `c/n` (one representative each).
    pub grid_cells: usize,
    /// Odd-numbered representatives.
    pub odd_points: usize,
    /// Intervals between consecutive odd representatives.
    pub spans: usize,
    /// Spans with fewer than `6c·n^γ` interior cut points.
    pub sparse_spans: usize,
    /// Long partition intervals found inside sparse spans.
    pub long_intervals: usize,
    /// Cut points whose index is below the index floor.
    pub low_index_points: usize,
    /// Long intervals with both indices above the floor.
    pub survivors: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoodIntervalSearch {
    pub interval: GoodInterval,
    pub n: usize,
    pub gamma: f64,
    pub c: f64,
    /// `1 / (6 n^{γ+1})`.
    pub length_floor: f64,
    /// `[n / (24c)]^{1/(γ+1)}`.
    pub index_floor: f64,
    pub stats: SelectionStats,
}

impl GoodIntervalSearch {
    /// Both conclusions, checked directly on the returned interval.
    pub fn conclusions_hold(&self) -> bool {
        let i = &self.interval;
        i.length() > self.length_floor
            && i.left_index as f64 > self.index_floor
            && i.right_index as f64 > self.index_floor
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum NotFound {
    /// `|ζ_n| < n^{γ+1}` fails.
    TooManyCuts { cuts: usize, limit: f64 },
    /// `diam(ζ_n) < c/n` fails.
    DiameterTooLarge { diameter: f64, limit: f64 },
    /// The grid is too coarse to form a single span.
    GridTooSmall { cells: usize },
    /// Hypotheses hold but no long interval has both indices above the floor.
    NoSurvivor { stats: SelectionStats },
}

impl NotFound {
    pub fn is_hypothesis_failure(&self) -> bool {
        matches!(self, NotFound::TooManyCuts { .. } | NotFound::DiameterTooLarge { .. })
    }
}

/// Search for a long partition interval whose endpoints both have large
/// indices, by the grid / odd-subset / sparse-span construction.
pub fn find_good_interval(
    p: &IndexedPartition,
    gamma: f64,
    c: f64,
) -> Result<Result<GoodIntervalSearch, NotFound>, PartitionError> {
    for (name, value) in [("gamma", gamma), ("c", c)] {
        if !(value > 0.0 && value.is_finite()) {
            return Err(PartitionError::BadParameter { name, value });
        }
    }
    let n = p.level();
    if n == 0 {
        return Err(PartitionError::BadParameter { name: "n", value: 0.0 });
    }
    let nf = n as f64;
    let cut_limit = nf.powf(gamma + 1.0);
    if p.len() as f64 >= cut_limit {
        return Ok(Err(NotFound::TooManyCuts { cuts: p.len(), limit: cut_limit }));
    }
    let diameter = partition_diameter(p);
    let width = c / nf;
    if diameter >= width {
        return Ok(Err(NotFound::DiameterTooLarge { diameter, limit: width }));
    }

    let cuts = p.cut_points();
    let idx = p.indices();
    let cells = (nf / c).floor() as usize;
    let mut stats = SelectionStats { grid_cells: cells, ..Default::default() };

    // Leftmost cut point of each half-open cell [(k-1)c/n, kc/n).
    let mut reps = Vec::with_capacity(cells);
    for k in 1..=cells {
        let lo = (k - 1) as f64 * width;
        let hi = k as f64 * width;
        let j = cuts.partition_point(|&t| t < lo);
        if j < cuts.len() && cuts[j] < hi {
            reps.push(j);
        } else {
            // Cannot happen when diam < c/n, up to rounding at the cell edge.
            return Ok(Err(NotFound::DiameterTooLarge { diameter, limit: width }));
        }
    }
    let odd: Vec<usize> = reps.iter().step_by(2).copied().collect();
    stats.odd_points = odd.len();
    if odd.len() < 2 {
        return Ok(Err(NotFound::GridTooSmall { cells }));
    }
    stats.spans = odd.len() - 1;

    let sparse_limit = 6.0 * c * nf.powf(gamma);
    let length_floor = 1.0 / (6.0 * cut_limit);
    let index_floor = (nf / (24.0 * c)).floor().powf(1.0 / (gamma + 1.0));
    stats.low_index_points = idx.iter().filter(|&&i| (i as f64) < index_floor).count();

    let mut found: Option<GoodInterval> = None;
    for w in odd.windows(2) {
        let (a, b) = (w[0], w[1]);
        let interior = b - a - 1;
        if (interior as f64) >= sparse_limit {
            continue;
        }
        stats.sparse_spans += 1;
        // Longest partition interval inside the span, leftmost on ties.
        let mut best: Option<usize> = None;
        for j in a..b {
            let len = cuts[j + 1] - cuts[j];
            if best.is_none_or(|bj| len > cuts[bj + 1] - cuts[bj]) {
                best = Some(j);
            }
        }
        let Some(j) = best else { continue };
        if cuts[j + 1] - cuts[j] <= length_floor {
            continue;
        }
        stats.long_intervals += 1;
        if (idx[j] as f64) > index_floor && (idx[j + 1] as f64) > index_floor {
            stats.survivors += 1;
            if found.is_none() {
                found = Some(GoodInterval {
                    left: cuts[j],
                    right: cuts[j + 1],
                    left_index: idx[j],
                    right_index: idx[j + 1],
                });
            }
        }
    }
    Ok(match found {
        Some(interval) => Ok(GoodIntervalSearch {
            interval,
            n,
            gamma,
            c,
            length_floor,
            index_floor,
            stats,
        }),
        None => Err(NotFound::NoSurvivor { stats }),
    })
}

/// `2/√3 − 1`.
pub const CRITICAL_GAMMA_CLOSED_FORM: f64 = 0.154_700_538_379_251_5;

/// Residual of `3(t − 1/t) = 1/t` at `t = γ + 1`.
pub fn feasibility_residual(gamma: f64) -> f64 {
    let t = gamma + 1.0;
    3.0 * (t - 1.0 / t) - 1.0 / t
}

/// Whether `(−3−ε)(1/(γ+1) − γ − 1) < 1/(γ+1)`.
pub fn feasible(gamma: f64, epsilon: f64) -> bool {
    let t = gamma + 1.0;
    (-3.0 - epsilon) * (1.0 / t - t) < 1.0 / t
}

/// The positive root of the feasibility equation, found by bisection on
/// `(0, 1)` and cross-checked against `2/√3 − 1`.
pub fn critical_gamma() -> f64 {
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    debug_assert!(feasibility_residual(lo) < 0.0 && feasibility_residual(hi) > 0.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if feasibility_residual(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let root = 0.5 * (lo + hi);
    let closed = 2.0 / 3.0_f64.sqrt() - 1.0;
    assert!((root - closed).abs() < 1e-12, "bisection {root} disagrees with closed form {closed}");
    root
}

/// `μ = (c/2)·n^{1/(γ+1) − γ − 1}`.
pub fn beam_width(n: usize, gamma: f64, c: f64) -> f64 {
    let t = gamma + 1.0;
    0.5 * c * (n as f64).powf(1.0 / t - t)
}

/// Least-squares fit of `log P_n` against `log n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthFit {
    pub exponent: f64,
    pub intercept: f64,
    /// `None` when the series is constant.
    pub r_squared: Option<f64>,
    pub points: usize,
}

impl GrowthFit {
    pub fn is_degenerate(&self) -> bool {
        self.r_squared.is_none()
    }
}

pub fn fit_growth_exponent<I>(series: I) -> Result<GrowthFit, PartitionError>
where
    I: IntoIterator<Item = (usize, f64)>,
{
    let pts: Vec<(f64, f64)> = series
        .into_iter()
        .map(|(n, p)| {
            if n >= 1 && p >= 1.0 && p.is_finite() {
                Ok(((n as f64).ln(), p.ln()))
            } else {
                Err(PartitionError::InsufficientData)
            }
        })
        .collect::<Result<_, _>>()?;
    if pts.len() < 5 {
        return Err(PartitionError::InsufficientData);
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(PartitionError::InsufficientData);
    }
    if syy <= 0.0 || pts.iter().all(|p| p.1 == pts[0].1) {
        return Ok(GrowthFit { exponent: 0.0, intercept: my, r_squared: None, points: pts.len() });
    }
    let slope = sxy / sxx;
    Ok(GrowthFit {
        exponent: slope,
        intercept: my - slope * mx,
        r_squared: Some(sxy * sxy / (sxx * syy)),
        points: pts.len(),
    })
}

/// A random partition at level `n` satisfying `|ζ_n| < n^{γ+1}` and
/// `diam < c/n`, whose indices grow like a refining sequence: at most
/// `m^{γ+1}` cut points have index `≤ m`.
pub fn synthetic_partition<R: Rng>(n: usize, gamma: f64, c: f64, rng: &mut R) -> IndexedPartition {
    let nf = n as f64;
    let limit = nf.powf(gamma + 1.0);
    // Spacing below c/n with room to jitter.
    let min_count = (2.0 * nf / c).ceil();
    let max_count = (0.9 * limit).floor().max(min_count + 1.0);
    let count = rng.gen_range(min_count..max_count) as usize;
    let step = 1.0 / (count as f64 + 1.0);
    let mut cuts: Vec<f64> = (1..=count)
        .map(|i| i as f64 * step + rng.gen_range(-0.25..0.25) * step)
        .collect();
    cuts.sort_by(f64::total_cmp);
    // Index of the j-th point in a random order: floor(j^{1/(γ+1)}) + 1.
    let mut order: Vec<usize> = (0..count).collect();
    for i in (1..count).rev() {
        let j = rng.gen_range(0..=i);
        order.swap(i, j);
    }
    let mut indices = vec![0; count];
    for (rank, &pos) in order.iter().enumerate() {
        let j = (rank + 1) as f64;
        indices[pos] = ((j.powf(1.0 / (gamma + 1.0))).floor() as usize + 1).min(n);
    }
    IndexedPartition::new(n, cuts, indices).expect("jittered grid is strictly increasing")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Angle, Point2};
    use crate::unfolding::Itinerary;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn diag(offset: f64, reflections: usize) -> GeneralizedDiagonal {
        GeneralizedDiagonal {
            source: 0,
            target: 2,
            direction: offset,
            offset,
            reflections,
            target_vertex_image: Point2::ORIGIN,
            arrival_direction: 0.0,
            itinerary: Itinerary::default(),
        }
    }

    #[test]
    fn empty_partition() {
        let p = build_partition(&[], Angle::new(1.0).unwrap(), 3).unwrap();
        assert!(p.is_empty());
        assert_eq!(p.boundaries(), vec![0.0, 1.0]);
        assert_eq!(partition_diameter(&p), 1.0);
    }

    #[test]
    fn diameter_of_two_cuts() {
        let p = IndexedPartition::new(2, vec![0.25, 0.5], vec![1, 2]).unwrap();
        assert_eq!(partition_diameter(&p), 0.5);
    }

    #[test]
    fn merge_keeps_smaller_index() {
        let a = Angle::new(1.0).unwrap();
        let p = build_partition(&[diag(0.5, 4), diag(0.5 + 1e-14, 2), diag(0.25, 1)], a, 4).unwrap();
        assert_eq!(p.cut_points(), &[0.25, 0.5]);
        assert_eq!(p.indices(), &[1, 2]);
    }

    #[test]
    fn build_rejects_bad_input() {
        let a = Angle::new(1.0).unwrap();
        assert!(matches!(
            build_partition(&[diag(1.2, 0)], a, 0),
            Err(PartitionError::DirectionOutsideAngle { .. })
        ));
        assert!(matches!(
            build_partition(&[diag(0.2, 3)], a, 2),
            Err(PartitionError::IndexAboveLevel { .. })
        ));
        let mut other = diag(0.3, 0);
        other.source = 1;
        assert!(matches!(build_partition(&[diag(0.2, 0), other], a, 2), Err(PartitionError::MixedSources(0, 1))));
    }

    #[test]
    fn uniform_grid_good_interval() {
        let n = 1000;
        let cuts: Vec<f64> = (1..n).map(|i| i as f64 / n as f64).collect();
        let p = IndexedPartition::new(n, cuts, vec![n; n - 1]).unwrap();
        let s = find_good_interval(&p, 0.1, 2.0).unwrap().unwrap();
        let floor = ((n as f64 / 48.0).floor()).powf(1.0 / 1.1);
        assert!(s.interval.left_index as f64 > floor && s.interval.right_index as f64 > floor);
        assert!(s.conclusions_hold());
        assert!((s.interval.left - 0.001).abs() < 1e-15);
        assert!((s.interval.right - 0.002).abs() < 1e-15);
    }

    #[test]
    fn wide_gap_fails_hypothesis() {
        let n = 1000;
        let c = 2.0;
        // One gap of width 2c/n.
        let mut cuts: Vec<f64> = (1..n).map(|i| i as f64 / n as f64).collect();
        cuts.retain(|&t| !(t > 0.5 && t < 0.5 + 2.0 * c / n as f64));
        let len = cuts.len();
        let p = IndexedPartition::new(n, cuts, vec![n; len]).unwrap();
        match find_good_interval(&p, 0.1, c).unwrap() {
            Err(nf) => assert!(matches!(nf, NotFound::DiameterTooLarge { .. })),
            Ok(s) => panic!("unexpected {s:?}"),
        }
    }

    #[test]
    fn too_many_cuts_fails_hypothesis() {
        let n = 10;
        let cuts: Vec<f64> = (1..40).map(|i| i as f64 / 40.0).collect();
        let p = IndexedPartition::new(n, cuts, vec![5; 39]).unwrap();
        assert!(matches!(find_good_interval(&p, 0.1, 2.0).unwrap(), Err(NotFound::TooManyCuts { .. })));
    }

    #[test]
    fn low_indices_on_left_push_survivor_right() {
        let n = 2000;
        let c = 2.0;
        let gamma = 0.1;
        // Dense index-1 points on [0, 0.5], spacing 1/n elsewhere with index n.
        let mut cuts = Vec::new();
        let mut idx = Vec::new();
        let left = 500;
        for i in 1..=left {
            cuts.push(0.5 * i as f64 / (left as f64 + 0.5));
            idx.push(1);
        }
        let mut t = 0.5 + 0.5 / n as f64;
        while t < 1.0 {
            cuts.push(t);
            idx.push(n);
            t += 1.0 / n as f64;
        }
        let p = IndexedPartition::new(n, cuts, idx).unwrap();
        let s = find_good_interval(&p, gamma, c).unwrap().unwrap();
        assert!(s.interval.left > 0.5, "{s:?}");
        assert!(s.conclusions_hold());
        assert_eq!(s.interval.left_index, n);
    }

    #[test]
    fn critical_gamma_matches_closed_form() {
        let g = critical_gamma();
        assert!((g - (2.0 / 3.0_f64.sqrt() - 1.0)).abs() < 1e-12);
        assert!((g - 0.154_700_538_379_251_46).abs() < 1e-12);
        assert!(feasibility_residual(g).abs() < 1e-12);
        assert!((g - CRITICAL_GAMMA_CLOSED_FORM).abs() < 1e-15);
    }

    #[test]
    fn feasibility_below_critical() {
        let g = critical_gamma();
        assert!(feasible(g - 0.01, 0.01));
        assert!(!feasible(g + 0.01, 0.0));
    }

    #[test]
    fn exact_power_laws() {
        let sq = fit_growth_exponent((1..=20).map(|n| (n, (n * n) as f64))).unwrap();
        assert!((sq.exponent - 2.0).abs() < 1e-9);
        let lin = fit_growth_exponent((1..=20).map(|n| (n, 3.0 * n as f64))).unwrap();
        assert!((lin.exponent - 1.0).abs() < 1e-9);
        let flat = fit_growth_exponent((1..=20).map(|n| (n, 7.0))).unwrap();
        assert_eq!(flat.exponent, 0.0);
        assert!(flat.is_degenerate());
        assert!(fit_growth_exponent((1..=4).map(|n| (n, n as f64))).is_err());
        assert!(fit_growth_exponent((0..=6).map(|n| (n, 1.0 + n as f64))).is_err());
    }

    #[test]
    fn synthetic_partitions_satisfy_hypotheses() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..5 {
            let p = synthetic_partition(10_000, 0.1, 2.0, &mut rng);
            assert!((p.len() as f64) < 10_000f64.powf(1.1));
            assert!(partition_diameter(&p) < 2.0 / 10_000.0);
            for m in [1usize, 10, 100, 1000] {
                let low = p.indices().iter().filter(|&&i| i <= m).count();
                assert!((low as f64) < (m as f64).powf(1.1) + 1.0);
            }
        }
    }

    #[test]
    fn csv_round_trip() {
        let p = IndexedPartition::new(3, vec![0.125, 0.5], vec![3, 0]).unwrap().with_vertex_angle(1.25);
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "# n=3,vertex_angle=1.25\ncut_point,index\n0.125,3\n0.5,0\n");
        assert_eq!(IndexedPartition::read_csv(&buf[..]).unwrap(), p);
    }
}
