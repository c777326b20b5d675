//! The development map on the family of rotated rhombi.
//!
//! `R_k` is the base rhombus turned by `k·α` about its centre, where `α` is
//! the angle at vertex 0. A horizontal ray entering `R_k` through one of its
//! two left-facing sides leaves through a right-facing side; reflecting the
//! rhombus there gives a translate of `R_{k±1}`, so the ray continues through
//! a left-facing side of the next level. Positions are kept as
//! `(level, side, arc length)`, never as absolute coordinates.

use crate::geometry::{GeometryError, Point2, Rhombus, Table};
use crate::rotation::cf_expand;
use crate::unfolding::{diagonal_from_vertex, trace_orbit, GeneralizedDiagonal, Itinerary, TraceOutcome};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};
use std::f64::consts::PI;

#[derive(Debug, thiserror::Error)]
pub enum DevError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("side {side} at level {level} does not face left")]
    NotLeftFacing { level: i64, side: usize },
    #[error("arc coordinates [{lo}, {hi}] do not fit a side of length {length}")]
    BadArc { lo: f64, hi: f64, length: f64 },
    #[error("the folded certificate runs into vertex {vertex} after {after} reflections")]
    SingularCertificate { after: usize, vertex: usize },
    #[error("certificate period {0} is odd")]
    ParityViolation(usize),
    #[error("orbit period {0} is odd; only even-period orbits can be dragged")]
    OddPeriod(usize),
    #[error("transverse step {step} is too large (limit {limit}); use a smaller step")]
    StepTooLarge { step: f64, limit: f64 },
    #[error("transverse step must be non-zero")]
    ZeroStep,
    #[error("the orbit does not close: residual {residual} after {period} reflections")]
    NotPeriodic { residual: f64, period: usize },
    #[error("start point is not on the boundary")]
    StartNotOnBoundary,
    #[error("no generalized diagonal leaves vertex {vertex} along the dragged orbit")]
    DragLost { vertex: usize },
}

/// Rotations `R_k` of a base rhombus by multiples of its angle at vertex 0.
#[derive(Debug, Clone)]
pub struct RotatedFamily {
    base: Rhombus,
    alpha: f64,
    local: [Point2; 4],
    side_length: f64,
    vertex_eps: f64,
    line_eps: f64,
    rational: Option<(u128, u128)>,
}

/// Which opposite vertex pair plays the role of `A, B`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VertexPair {
    /// Vertices 0 and 2.
    Horizontal,
    /// Vertices 1 and 3.
    Vertical,
}

impl RotatedFamily {
    pub fn new(base: Rhombus, pair: VertexPair) -> Self {
        let base = match pair {
            VertexPair::Horizontal => base,
            // Relabel so that vertex 0 is the old vertex 1.
            VertexPair::Vertical => Rhombus::new(
                base.half_diagonal_v,
                base.half_diagonal_h,
                crate::PlanarIsometry::new(
                    base.pose.rotation() + PI / 2.0,
                    base.pose.translation(),
                    crate::geometry::Orientation::Preserving,
                ),
            )
            .expect("half diagonals already validated"),
        };
        let alpha = base.vertex_angle_h();
        let tol = crate::Tolerances::default();
        let diameter = 2.0 * base.half_diagonal_h.max(base.half_diagonal_v);
        RotatedFamily {
            base,
            alpha,
            local: base.local_vertices(),
            side_length: base.side_length(),
            vertex_eps: tol.vertex_rel * diameter,
            line_eps: tol.line_rel * diameter,
            rational: rational_multiple_of_pi(alpha),
        }
    }

    pub fn base(&self) -> &Rhombus {
        &self.base
    }

    /// Rotation step between consecutive levels.
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `Some((p, q))` when `α/π` is within `1e-12` of `p/q` with `q ≤ 1000`.
    pub fn rational_flag(&self) -> Option<(u128, u128)> {
        self.rational
    }

    pub fn side_length(&self) -> f64 {
        self.side_length
    }

    fn theta(&self, level: i64) -> f64 {
        self.base.pose.rotation() + level as f64 * self.alpha
    }

    /// Vertices of `R_k` with its centre at the origin.
    pub fn level_vertices(&self, level: i64) -> [Point2; 4] {
        let th = self.theta(level);
        self.local.map(|p| p.rotated(th))
    }

    fn side_of(&self, level: i64, side: usize) -> (Point2, Point2) {
        let v = self.level_vertices(level);
        let a = v[side];
        (a, (v[(side + 1) % 4] - a) * (1.0 / self.side_length))
    }

    /// The two sides whose points see `(1, 0)` pointing inward.
    pub fn left_facing(&self, level: i64) -> Vec<usize> {
        (0..4).filter(|&i| self.side_of(level, i).1.y < 0.0).collect()
    }

    fn check_left(&self, level: i64, side: usize) -> Result<(Point2, Point2), DevError> {
        let s = self.side_of(level, side % 4);
        if side < 4 && s.1.y < 0.0 {
            Ok(s)
        } else {
            Err(DevError::NotLeftFacing { level, side })
        }
    }

    /// Vertical extent of `R_k`, which is the measure of `X_k`.
    pub fn level_measure(&self, level: i64) -> f64 {
        let v = self.level_vertices(level);
        let ys = v.map(|p| p.y);
        ys.iter().cloned().fold(f64::MIN, f64::max) - ys.iter().cloned().fold(f64::MAX, f64::min)
    }

    /// Exit of the horizontal ray at height `y` through a right-facing side:
    /// `(side, arc length from its start)`.
    fn exit_at(&self, level: i64, y: f64) -> (usize, f64) {
        let v = self.level_vertices(level);
        let mut best = None;
        for j in 0..4 {
            let (a, u) = (v[j], (v[(j + 1) % 4] - v[j]) * (1.0 / self.side_length));
            if u.y <= 0.0 {
                continue;
            }
            let s = (y - a.y) / u.y;
            let excess = (-s).max(s - self.side_length).max(0.0);
            if best.is_none_or(|(_, _, e)| excess < e) {
                best = Some((j, s.clamp(0.0, self.side_length), excess));
            }
        }
        let (j, s, _) = best.expect("a rhombus has a right-facing side");
        (j, s)
    }

    /// Exit of the leftward ray at height `y` through a left-facing side.
    fn entry_at(&self, level: i64, y: f64) -> (usize, f64) {
        let v = self.level_vertices(level);
        let mut best = None;
        for j in 0..4 {
            let (a, u) = (v[j], (v[(j + 1) % 4] - v[j]) * (1.0 / self.side_length));
            if u.y >= 0.0 {
                continue;
            }
            let s = (y - a.y) / u.y;
            let excess = (-s).max(s - self.side_length).max(0.0);
            if best.is_none_or(|(_, _, e)| excess < e) {
                best = Some((j, s.clamp(0.0, self.side_length), excess));
            }
        }
        let (j, s, _) = best.expect("a rhombus has a left-facing side");
        (j, s)
    }

    fn near_end(&self, s: f64) -> Option<usize> {
        if s <= self.vertex_eps {
            Some(0)
        } else if self.side_length - s <= self.vertex_eps {
            Some(1)
        } else {
            None
        }
    }
}

fn rational_multiple_of_pi(alpha: f64) -> Option<(u128, u128)> {
    let x = alpha / PI;
    let cf = cf_expand(x, 40).ok()?;
    (0..cf.q.len())
        .take_while(|&i| cf.q[i] <= 1000)
        .find(|&i| (x - cf.p[i] as f64 / cf.q[i] as f64).abs() < 1e-12)
        .map(|i| (cf.p[i], cf.q[i]))
}

/// Level change when leaving through side `j`.
pub fn level_delta(side: usize) -> i64 {
    if side.is_multiple_of(2) {
        -1
    } else {
        1
    }
}

/// Local index of the endpoint of `side` that lies on the horizontal diagonal.
fn pivot_vertex(side: usize) -> usize {
    match side % 4 {
        0 | 3 => 0,
        _ => 2,
    }
}

/// A point on a left-facing side of `R_level`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DevPoint {
    pub level: i64,
    pub side: usize,
    /// Arc length from the side's start vertex.
    pub s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DevStep {
    Moved { point: DevPoint, level_delta: i64 },
    /// The horizontal ray runs into `vertex` of the current level.
    VertexHit { vertex: usize },
}

/// Follow the horizontal ray from `x` to the next rhombus.
pub fn dev_step(fam: &RotatedFamily, x: DevPoint) -> Result<DevStep, DevError> {
    let (a, u) = fam.check_left(x.level, x.side)?;
    if !(x.s >= 0.0 && x.s <= fam.side_length) {
        return Err(DevError::BadArc { lo: x.s, hi: x.s, length: fam.side_length });
    }
    let y = a.y + x.s * u.y;
    let (j, s) = fam.exit_at(x.level, y);
    if let Some(end) = fam.near_end(s) {
        return Ok(DevStep::VertexHit { vertex: (j + end) % 4 });
    }
    let d = level_delta(j);
    Ok(DevStep::Moved {
        point: DevPoint { level: x.level + d, side: 3 - j, s: fam.side_length - s },
        level_delta: d,
    })
}

/// Undo [`dev_step`]: follow the leftward ray back to the previous rhombus.
pub fn inverse_step(fam: &RotatedFamily, x: DevPoint) -> Result<DevStep, DevError> {
    fam.check_left(x.level, x.side)?;
    let exit_side = 3 - x.side;
    let d = level_delta(exit_side);
    let level = x.level - d;
    let (a, u) = fam.side_of(level, exit_side);
    let y = a.y + (fam.side_length - x.s) * u.y;
    let (j, s) = fam.entry_at(level, y);
    if let Some(end) = fam.near_end(s) {
        return Ok(DevStep::VertexHit { vertex: (j + end) % 4 });
    }
    Ok(DevStep::Moved { point: DevPoint { level, side: j, s }, level_delta: -d })
}

/// An arc of a left-facing side, with its vertical extent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamInterval {
    pub level: i64,
    pub side: usize,
    pub s_lo: f64,
    pub s_hi: f64,
    pub mu: f64,
}

impl BeamInterval {
    pub fn new(fam: &RotatedFamily, level: i64, side: usize, s_lo: f64, s_hi: f64) -> Result<Self, DevError> {
        let (_, u) = fam.check_left(level, side)?;
        if !(0.0 <= s_lo && s_lo <= s_hi && s_hi <= fam.side_length) {
            return Err(DevError::BadArc { lo: s_lo, hi: s_hi, length: fam.side_length });
        }
        Ok(BeamInterval { level, side, s_lo, s_hi, mu: (s_hi - s_lo) * u.y.abs() })
    }

    /// The interval's arc around `s` whose vertical extent is `mu`.
    pub fn around(fam: &RotatedFamily, level: i64, side: usize, s: f64, mu: f64) -> Result<Self, DevError> {
        let (_, u) = fam.check_left(level, side)?;
        let half = 0.5 * mu / u.y.abs();
        Self::new(fam, level, side, s - half, s + half)
    }

    pub fn midpoint(&self) -> DevPoint {
        DevPoint { level: self.level, side: self.side, s: 0.5 * (self.s_lo + self.s_hi) }
    }
}

/// Vertical extent of the interval's chord.
pub fn lambda_measure(fam: &RotatedFamily, interval: &BeamInterval) -> f64 {
    let (_, u) = fam.side_of(interval.level, interval.side);
    (interval.s_hi - interval.s_lo) * u.y.abs()
}

/// Vertical widths of the parts of `X_k` sent to levels `k+1` and `k−1`.
pub fn gap_extents(fam: &RotatedFamily, level: i64) -> (f64, f64) {
    let (mut up, mut down) = (0.0, 0.0);
    for j in 0..4 {
        let (_, u) = fam.side_of(level, j);
        if u.y > 0.0 {
            let h = fam.side_length * u.y;
            if level_delta(j) > 0 {
                up += h;
            } else {
                down += h;
            }
        }
    }
    (up, down)
}

/// The vertex shared by the two right-facing sides lies strictly inside the
/// interval's height range, so the beam would split.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitEvent {
    pub at_step: usize,
    pub level: i64,
    pub vertex: usize,
    /// Height of the vertex above the bottom of the beam, as a fraction of its width.
    pub fraction: f64,
    pub interval: BeamInterval,
}

enum IntervalStep {
    Image { next: BeamInterval, exit_side: usize },
    Split { vertex: usize, fraction: f64 },
}

fn step_interval(fam: &RotatedFamily, i: &BeamInterval) -> Result<IntervalStep, DevError> {
    let (a, u) = fam.check_left(i.level, i.side)?;
    let y1 = a.y + i.s_lo * u.y;
    let y2 = a.y + i.s_hi * u.y;
    let (ylo, yhi) = (y1.min(y2), y1.max(y2));
    let v = fam.level_vertices(i.level);
    // Rightmost vertex: end of the lower right-facing side.
    let (jr, _) = (0..4)
        .filter(|&j| fam.side_of(i.level, j).1.y > 0.0)
        .map(|j| (j, v[(j + 1) % 4].x))
        .fold((usize::MAX, f64::MIN), |acc, c| if c.1 > acc.1 { c } else { acc });
    let vr = (jr + 1) % 4;
    let vy = v[vr].y;
    if vy > ylo + fam.line_eps && vy < yhi - fam.line_eps && yhi > ylo {
        return Ok(IntervalStep::Split { vertex: vr, fraction: (vy - ylo) / (yhi - ylo) });
    }
    let (j, _) = fam.exit_at(i.level, 0.5 * (ylo + yhi));
    let (b, w) = fam.side_of(i.level, j);
    let to_new = |y: f64| fam.side_length - ((y - b.y) / w.y).clamp(0.0, fam.side_length);
    let (n1, n2) = (to_new(y1), to_new(y2));
    let level = i.level + level_delta(j);
    let side = 3 - j;
    let (_, nu) = fam.side_of(level, side);
    let (s_lo, s_hi) = (n1.min(n2), n1.max(n2));
    Ok(IntervalStep::Image {
        next: BeamInterval { level, side, s_lo, s_hi, mu: (s_hi - s_lo) * nu.y.abs() },
        exit_side: j,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Evolution {
    Complete(Vec<BeamInterval>),
    Split { images: Vec<BeamInterval>, event: SplitEvent },
}

impl Evolution {
    pub fn images(&self) -> &[BeamInterval] {
        match self {
            Evolution::Complete(v) | Evolution::Split { images: v, .. } => v,
        }
    }
}

/// Push `interval` forward `steps` times; the images exclude the start.
pub fn evolve_interval(fam: &RotatedFamily, interval: &BeamInterval, steps: usize) -> Result<Evolution, DevError> {
    let mut cur = *interval;
    let mut images = Vec::with_capacity(steps);
    for k in 1..=steps {
        match step_interval(fam, &cur)? {
            IntervalStep::Image { next, .. } => {
                images.push(next);
                cur = next;
            }
            IntervalStep::Split { vertex, fraction } => {
                return Ok(Evolution::Split {
                    images,
                    event: SplitEvent { at_step: k, level: cur.level, vertex, fraction, interval: cur },
                })
            }
        }
    }
    Ok(Evolution::Complete(images))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn of(n: usize) -> Self {
        if n.is_multiple_of(2) {
            Parity::Even
        } else {
            Parity::Odd
        }
    }
}

/// Two images `I_p`, `I_q` of a beam on the same side of the same level
/// overlap; the segment joining a common point in the two copies closes up.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitCertificate {
    pub p: usize,
    pub q: usize,
    pub point: DevPoint,
    pub period: usize,
    pub parity: Parity,
    /// Displacement between the two copies in the unfolded plane.
    pub shift: Point2,
    /// Arc range shared by `I_p` and `I_q`.
    pub overlap: (f64, f64),
    /// Distance between start and end of the re-simulated folded orbit,
    /// plus the direction mismatch scaled by its length.
    pub closure_residual: f64,
    pub orbit_length: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum BeamSearch {
    Found { certificate: OrbitCertificate, steps: usize },
    NotFound { steps: usize },
    Split(SplitEvent),
}

/// Evolve `interval` until two images on the same side of the same level
/// overlap, then verify the resulting periodic orbit in the base rhombus.
pub fn find_periodic_in_beam(
    fam: &RotatedFamily,
    interval: &BeamInterval,
    max_steps: usize,
) -> Result<BeamSearch, DevError> {
    fam.check_left(interval.level, interval.side)?;
    let mut visited: Visited = HashMap::new();
    // Unfolded centre of each copy, the first at the origin.
    let mut centres = vec![Point2::ORIGIN];
    let mut levels = vec![interval.level];
    let mut cur = *interval;
    record(&mut visited, &cur, 0);
    for step in 1..=max_steps {
        let (next, exit_side) = match step_interval(fam, &cur)? {
            IntervalStep::Image { next, exit_side } => (next, exit_side),
            IntervalStep::Split { vertex, fraction } => {
                return Ok(BeamSearch::Split(SplitEvent {
                    at_step: step,
                    level: cur.level,
                    vertex,
                    fraction,
                    interval: cur,
                }))
            }
        };
        let pv = fam.local[pivot_vertex(exit_side)];
        let c = *centres.last().unwrap();
        centres.push(c + pv.rotated(fam.theta(cur.level)) - pv.rotated(fam.theta(next.level)));
        levels.push(next.level);
        if let Some((p, lo, hi)) = overlapping(&visited, &next) {
            let period = step - p;
            if period % 2 != 0 {
                return Err(DevError::ParityViolation(period));
            }
            let mut certificate = OrbitCertificate {
                p,
                q: step,
                point: DevPoint { level: next.level, side: next.side, s: 0.5 * (lo + hi) },
                period,
                parity: Parity::of(period),
                shift: centres[step] - centres[p],
                overlap: (lo, hi),
                closure_residual: f64::NAN,
                orbit_length: f64::NAN,
            };
            let orbit = certificate_to_billiard_orbit(fam, &certificate)?;
            certificate.closure_residual = orbit.closure_residual;
            certificate.orbit_length = orbit.length;
            return Ok(BeamSearch::Found { certificate, steps: step });
        }
        record(&mut visited, &next, step);
        cur = next;
    }
    Ok(BeamSearch::NotFound { steps: max_steps })
}

/// Images seen so far per `(level, side)`, keyed by the bits of `s_lo`,
/// holding `(s_hi, step)`.
type Visited = HashMap<(i64, usize), BTreeMap<u64, (f64, usize)>>;

fn record(visited: &mut Visited, i: &BeamInterval, step: usize) {
    visited.entry((i.level, i.side)).or_default().insert(i.s_lo.max(0.0).to_bits(), (i.s_hi, step));
}

/// Earliest recorded image overlapping `i` in an interval of positive length.
fn overlapping(
    visited: &Visited,
    i: &BeamInterval,
) -> Option<(usize, f64, f64)> {
    let map = visited.get(&(i.level, i.side))?;
    let key = i.s_lo.max(0.0).to_bits();
    let mut best: Option<(usize, f64, f64)> = None;
    let before = map.range(..=key).next_back();
    let after = map.range(key..).take_while(|(k, _)| f64::from_bits(**k) < i.s_hi);
    for (k, &(hi, step)) in before.into_iter().chain(after) {
        let lo = f64::from_bits(*k).max(i.s_lo);
        let hi = hi.min(i.s_hi);
        if hi > lo && best.is_none_or(|b| step < b.0) {
            best = Some((step, lo, hi));
        }
    }
    best
}

/// A periodic billiard orbit that starts on a side of the table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicOrbit {
    pub start: Point2,
    pub start_side: usize,
    pub direction: Point2,
    pub period: usize,
    pub itinerary: Itinerary,
    pub closure_residual: f64,
    pub length: f64,
}

impl PeriodicOrbit {
    /// Trace from `start` (on `start_side`) and measure how well it closes.
    pub fn trace(table: &Table, start: Point2, start_side: usize, direction: Point2, period: usize) -> Result<Self, DevError> {
        let d = direction.normalized().ok_or(GeometryError::BadDirection)?;
        match trace_orbit(table, start, d, period)? {
            TraceOutcome::VertexHit { after, vertex, .. } => Err(DevError::SingularCertificate { after, vertex }),
            TraceOutcome::Completed(t) => Ok(PeriodicOrbit {
                start,
                start_side,
                direction: d,
                period,
                closure_residual: t.endpoint.dist(start) + t.length * t.final_direction.dist(d),
                length: t.length,
                itinerary: t.itinerary,
            }),
        }
    }

    /// As [`PeriodicOrbit::trace`], locating the side that carries `start`.
    pub fn from_start(table: &Table, start: Point2, direction: Point2, period: usize) -> Result<Self, DevError> {
        let side = (0..table.num_vertices())
            .map(|i| {
                let (a, b) = table.side(i);
                let t = ((start - a).dot(b - a) / (b - a).dot(b - a)).clamp(0.0, 1.0);
                (i, (a + (b - a) * t).dist(start))
            })
            .min_by(|x, y| x.1.total_cmp(&y.1))
            .filter(|&(_, d)| d <= table.vertex_eps())
            .ok_or(DevError::StartNotOnBoundary)?
            .0;
        Self::trace(table, start, side, direction, period)
    }

    pub fn is_closed(&self, rel_tol: f64) -> bool {
        self.closure_residual < rel_tol * self.length.max(1.0)
    }
}

fn flip(p: Point2, times: usize) -> Point2 {
    if times.is_multiple_of(2) {
        p
    } else {
        Point2::new(p.x, -p.y)
    }
}

/// Fold the straight segment between the two copies back into the base rhombus.
pub fn certificate_to_billiard_orbit(fam: &RotatedFamily, cert: &OrbitCertificate) -> Result<PeriodicOrbit, DevError> {
    if !cert.period.is_multiple_of(2) {
        return Err(DevError::ParityViolation(cert.period));
    }
    let x = cert.point;
    let l = &fam.local;
    let xi = l[x.side] + (l[(x.side + 1) % 4] - l[x.side]) * (x.s / fam.side_length);
    let th0 = fam.base.pose.rotation();
    let start = fam.base.center() + flip(xi, cert.p).rotated(th0);
    let dir = flip(cert.shift.rotated(-fam.theta(x.level)), cert.p).rotated(th0);
    let start_side = if cert.p.is_multiple_of(2) { x.side } else { 3 - x.side };
    PeriodicOrbit::trace(&fam.base.table(), start, start_side, dir, cert.period)
}

/// `C / μ^{3+ε}`.
pub fn beam_length_bound(c: f64, mu: f64, epsilon: f64) -> f64 {
    c / mu.powf(3.0 + epsilon)
}

/// The default constant `4·λ(X_0)`.
pub fn default_beam_constant(fam: &RotatedFamily) -> f64 {
    4.0 * fam.level_measure(0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum DragOutcome {
    /// `max_drags` steps taken without meeting a vertex.
    Completed { orbit: PeriodicOrbit, drags: usize, max_residual: f64 },
    VertexEncounter {
        vertex: usize,
        /// Number of full steps taken before the event.
        drags: usize,
        /// Signed transverse distance from the original orbit to the event.
        offset: f64,
        max_residual: f64,
        diagonal: GeneralizedDiagonal,
        /// The last closed orbit before the event.
        last_orbit: PeriodicOrbit,
    },
}

/// Relative closure tolerance used while dragging.
pub const DRAG_CLOSURE_TOLERANCE: f64 = 1e-9;

/// Translate an even-period orbit sideways by `transverse_step` per drag,
/// keeping its direction, until a reflection point meets a vertex.
pub fn drag_orbit(
    table: &Table,
    orbit: &PeriodicOrbit,
    transverse_step: f64,
    max_drags: usize,
) -> Result<DragOutcome, DevError> {
    if !orbit.period.is_multiple_of(2) {
        return Err(DevError::OddPeriod(orbit.period));
    }
    if transverse_step == 0.0 || !transverse_step.is_finite() {
        return Err(DevError::ZeroStep);
    }
    let limit = 0.25 * table.diameter();
    if transverse_step.abs() >= limit {
        return Err(DevError::StepTooLarge { step: transverse_step, limit });
    }
    if !orbit.is_closed(DRAG_CLOSURE_TOLERANCE) {
        return Err(DevError::NotPeriodic { residual: orbit.closure_residual, period: orbit.period });
    }
    let (a, b) = table.side(orbit.start_side);
    let len = (b - a).norm();
    let u = (b - a) * (1.0 / len);
    let d = orbit.direction;
    let sin = u.dot(d.perp());
    if sin.abs() < 1e-12 {
        return Err(DevError::StartNotOnBoundary);
    }
    let ds = transverse_step / sin;
    let s0 = (orbit.start - a).dot(u);
    let attempt = |s: f64| -> Option<PeriodicOrbit> {
        if !(s > 0.0 && s < len) {
            return None;
        }
        let o = PeriodicOrbit::trace(table, a + u * s, orbit.start_side, d, orbit.period).ok()?;
        (o.itinerary == orbit.itinerary && o.is_closed(DRAG_CLOSURE_TOLERANCE)).then_some(o)
    };

    let mut good = orbit.clone();
    let mut s_good = s0;
    let mut max_residual = orbit.closure_residual;
    for k in 0..max_drags {
        let s_next = s_good + ds;
        match attempt(s_next) {
            Some(o) => {
                max_residual = max_residual.max(o.closure_residual);
                good = o;
                s_good = s_next;
            }
            None => {
                // Localize the event between the last good and the failed position.
                let (mut lo, mut hi) = (s_good, s_next);
                let resolution = 1e-12 * table.diameter() / sin.abs();
                while (hi - lo).abs() > resolution {
                    let mid = 0.5 * (lo + hi);
                    if mid == lo || mid == hi {
                        break;
                    }
                    match attempt(mid) {
                        Some(o) => {
                            max_residual = max_residual.max(o.closure_residual);
                            good = o;
                            lo = mid;
                        }
                        None => hi = mid,
                    }
                }
                let (vertex, diagonal) = vertex_diagonal(table, &good)?;
                return Ok(DragOutcome::VertexEncounter {
                    vertex,
                    drags: k,
                    offset: (lo - s0) * sin,
                    max_residual,
                    diagonal,
                    last_orbit: good,
                });
            }
        }
    }
    Ok(DragOutcome::Completed { orbit: good, drags: max_drags, max_residual })
}

/// The generalized diagonal left behind when a reflection point of `orbit`
/// is (almost) at a vertex: leave that vertex along the orbit.
fn vertex_diagonal(table: &Table, orbit: &PeriodicOrbit) -> Result<(usize, GeneralizedDiagonal), DevError> {
    let trace = match trace_orbit(table, orbit.start, orbit.direction, orbit.period)? {
        TraceOutcome::Completed(t) => t,
        TraceOutcome::VertexHit { after, vertex, .. } => return Err(DevError::SingularCertificate { after, vertex }),
    };
    // Outgoing direction after each reflection point.
    let mut points = Vec::with_capacity(orbit.period + 1);
    let mut dir = orbit.direction;
    points.push((orbit.start, orbit.direction));
    for (i, &h) in trace.hit_points.iter().enumerate() {
        dir = table.reflect_direction(trace.itinerary.0[i], dir);
        points.push((h, dir));
    }
    let mut candidates: Vec<(f64, usize, Point2)> = Vec::new();
    for &(h, out) in &points {
        for v in 0..table.num_vertices() {
            candidates.push((h.dist(table.vertex(v)), v, out));
        }
    }
    candidates.sort_by(|x, y| x.0.total_cmp(&y.0));
    let nearest = candidates.first().map(|c| c.0).unwrap_or(f64::INFINITY);
    for &(dist, v, out) in &candidates {
        if dist > 1e3 * nearest.max(1e-15) && dist > table.vertex_eps() {
            break;
        }
        let angle = table.vertex_angle(v);
        let off = table.sector_offset(v, out);
        let edge = 1e-9;
        if off.abs() <= edge || (off - angle).abs() <= edge {
            // Straight along a side to the neighbouring vertex.
            let n = table.num_vertices();
            let target = if off.abs() <= edge { (v + 1) % n } else { (v + n - 1) % n };
            let d = out.normalized().ok_or(GeometryError::BadDirection)?;
            return Ok((
                v,
                GeneralizedDiagonal {
                    source: v,
                    target,
                    direction: d.angle(),
                    offset: off.clamp(0.0, angle),
                    reflections: 0,
                    target_vertex_image: table.vertex(target),
                    arrival_direction: d.angle(),
                    itinerary: Itinerary::default(),
                },
            ));
        }
        if off > 0.0 && off < angle {
            if let Some(diag) = diagonal_from_vertex(table, v, out, orbit.period + 1)? {
                return Ok((v, diag));
            }
        }
    }
    let v = candidates.first().map(|c| c.1).unwrap_or(0);
    Err(DevError::DragLost { vertex: v })
}
