//! Angular beam propagation through the unfolding of a convex table.
//!
//! A beam is a cone of directions from a fixed apex vertex that has crossed
//! the same sequence of sides so far. Within the unfolded plane every image
//! vertex that falls strictly inside a beam is the endpoint of a generalized
//! diagonal and cuts the beam in two. Processing depth by depth yields every
//! generalized diagonal from the apex with at most `n_max` reflections.

use crate::geometry::{
    reflect_across_segment, GeometryError, PlanarIsometry, Point2, RayExit, RightTriangle, Table,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::io::Write;

#[derive(Debug, thiserror::Error)]
pub enum UnfoldError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("beam budget of {budget} exceeded at depth {depth} ({live} live beams)")]
    BudgetExceeded { budget: usize, depth: usize, live: usize, partial: Box<BeamEnumeration> },
    #[error("output failed: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv output failed: {0}")]
    Csv(#[from] csv::Error),
    #[error("json output failed: {0}")]
    Json(#[from] serde_json::Error),
}

/// Sides hit, in order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Itinerary(pub Vec<usize>);

impl Itinerary {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn sides(&self) -> &[usize] {
        &self.0
    }

    pub fn reversed(&self) -> Itinerary {
        Itinerary(self.0.iter().rev().copied().collect())
    }

    /// No side repeats immediately.
    pub fn is_valid(&self) -> bool {
        self.0.windows(2).all(|w| w[0] != w[1])
    }
}

impl fmt::Display for Itinerary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|s| s.to_string()).collect();
        f.write_str(&parts.join("-"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnfoldingNode {
    /// Maps the base table onto the current image.
    pub iso: PlanarIsometry,
    pub depth: usize,
    pub itinerary: Itinerary,
}

/// Directions from `apex` whose sector offsets lie strictly between
/// `theta_lo` and `theta_hi` (radians, measured counterclockwise from the
/// edge towards vertex `apex + 1`).
#[derive(Debug, Clone, PartialEq)]
pub struct AngularBeam {
    pub apex: usize,
    pub theta_lo: f64,
    pub theta_hi: f64,
    pub node: UnfoldingNode,
}

impl AngularBeam {
    pub fn width(&self) -> f64 {
        self.theta_hi - self.theta_lo
    }
}

/// A billiard orbit from vertex `source` to vertex `target`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneralizedDiagonal {
    pub source: usize,
    pub target: usize,
    /// Initial direction in the table frame, radians in `(-π, π]`.
    pub direction: f64,
    /// Offset of `direction` inside the source vertex angle.
    pub offset: f64,
    pub reflections: usize,
    /// The target vertex in the unfolded plane.
    pub target_vertex_image: Point2,
    /// Direction of travel when the orbit reaches `target`, in the table frame.
    pub arrival_direction: f64,
    pub itinerary: Itinerary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnumerationOptions {
    /// Maximum number of live beams at any depth.
    pub node_budget: usize,
}

impl Default for EnumerationOptions {
    fn default() -> Self {
        EnumerationOptions { node_budget: 10_000_000 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeamEnumeration {
    pub apex: usize,
    pub n_max: usize,
    /// Sorted by offset.
    pub diagonals: Vec<GeneralizedDiagonal>,
    pub leaves: Vec<AngularBeam>,
    /// Deepest depth fully processed (equal to `n_max` unless partial).
    pub completed_depth: Option<usize>,
    pub partial: bool,
}

impl BeamEnumeration {
    /// Diagonals with at most `n` reflections.
    pub fn count_up_to(&self, n: usize) -> usize {
        self.diagonals.iter().filter(|d| d.reflections <= n).count()
    }
}

struct Beam {
    lo: f64,
    hi: f64,
    iso: PlanarIsometry,
    entry: Option<usize>,
    itinerary: Vec<usize>,
}

struct Frame<'a> {
    table: &'a Table,
    apex: usize,
    apex_pt: Point2,
    start: Point2,
    eps: f64,
}

impl Frame<'_> {
    fn offset(&self, w: Point2) -> f64 {
        let d = w - self.apex_pt;
        self.start.cross(d).atan2(self.start.dot(d))
    }

    fn direction(&self, offset: f64) -> Point2 {
        self.start.rotated(offset)
    }

    /// Split `beam` at the image vertices strictly inside it.
    fn process(&self, beam: Beam, depth: usize) -> (Vec<GeneralizedDiagonal>, Vec<Beam>) {
        let k = self.table.num_vertices();
        let images = self.table.vertex_images(&beam.iso);
        let excluded = |i: usize| match beam.entry {
            None => i == self.apex,
            Some(e) => i == e || i == (e + 1) % k,
        };
        let mut cuts: Vec<(f64, usize)> = Vec::new();
        for (i, &w) in images.iter().enumerate() {
            if excluded(i) {
                continue;
            }
            let r = w.dist(self.apex_pt);
            if r <= self.eps {
                continue;
            }
            let phi = self.offset(w);
            if phi <= beam.lo || phi >= beam.hi {
                continue;
            }
            if r * (phi - beam.lo).sin() > self.eps && r * (beam.hi - phi).sin() > self.eps {
                cuts.push((phi, i));
            }
        }
        cuts.sort_by(|a, b| a.0.total_cmp(&b.0));

        let inv = beam.iso.inverse();
        let diagonals = cuts
            .iter()
            .map(|&(phi, i)| {
                let d = self.direction(phi);
                GeneralizedDiagonal {
                    source: self.apex,
                    target: i,
                    direction: d.angle(),
                    offset: phi,
                    reflections: depth,
                    target_vertex_image: images[i],
                    arrival_direction: inv.apply_vector(d).angle(),
                    itinerary: Itinerary(beam.itinerary.clone()),
                }
            })
            .collect();

        let mut bounds = Vec::with_capacity(cuts.len() + 2);
        bounds.push(beam.lo);
        bounds.extend(cuts.iter().map(|c| c.0));
        bounds.push(beam.hi);
        let children = bounds
            .windows(2)
            .map(|w| {
                let mid = self.direction(0.5 * (w[0] + w[1]));
                let sign = beam.iso.orientation().sign();
                let exit = exit_side(&images, sign, beam.entry, self.apex_pt, mid, |s| {
                    beam.entry.is_none() && (s == self.apex || (s + 1) % k == self.apex)
                });
                Beam {
                    lo: w[0],
                    hi: w[1],
                    iso: beam.iso,
                    entry: Some(exit),
                    itinerary: beam.itinerary.clone(),
                }
            })
            .collect();
        (diagonals, children)
    }
}

/// The side of the polygon `images` through which the ray `o + t·d` leaves it.
/// `sign` is -1 when the images run clockwise.
fn exit_side(
    images: &[Point2],
    sign: f64,
    entry: Option<usize>,
    o: Point2,
    d: Point2,
    skip: impl Fn(usize) -> bool,
) -> usize {
    let k = images.len();
    let mut best = (usize::MAX, f64::INFINITY);
    for s in 0..k {
        if Some(s) == entry || skip(s) {
            continue;
        }
        let a = images[s];
        let e = images[(s + 1) % k] - a;
        let denom = e.cross(d);
        if sign * denom >= 0.0 {
            continue;
        }
        let t = e.cross(a - o) / denom;
        if t < best.1 {
            best = (s, t);
        }
    }
    debug_assert!(best.0 != usize::MAX, "beam has no exit side");
    best.0
}

/// Every generalized diagonal from `apex` with at most `n_max` reflections,
/// and the beams still alive at depth `n_max`.
pub fn propagate_beams(
    table: &Table,
    apex: usize,
    n_max: usize,
    opts: EnumerationOptions,
) -> Result<BeamEnumeration, UnfoldError> {
    if apex >= table.num_vertices() {
        return Err(GeometryError::NoSuchVertex(apex).into());
    }
    let frame = Frame {
        table,
        apex,
        apex_pt: table.vertex(apex),
        start: table.sector_start(apex),
        eps: table.vertex_eps(),
    };
    let mut beams = vec![Beam {
        lo: 0.0,
        hi: table.vertex_angle(apex),
        iso: PlanarIsometry::identity(),
        entry: None,
        itinerary: Vec::new(),
    }];
    let mut diagonals = Vec::new();
    let mut leaves = Vec::new();
    let mut completed = None;

    for depth in 0..=n_max {
        let results: Vec<_> =
            beams.into_par_iter().map(|b| frame.process(b, depth)).collect();
        let mut next = Vec::new();
        for (diags, children) in results {
            diagonals.extend(diags);
            next.extend(children);
        }
        if depth == n_max {
            leaves = next
                .into_iter()
                .map(|b| AngularBeam {
                    apex,
                    theta_lo: b.lo,
                    theta_hi: b.hi,
                    node: UnfoldingNode {
                        iso: b.iso,
                        depth,
                        itinerary: Itinerary(b.itinerary),
                    },
                })
                .collect();
            completed = Some(depth);
            break;
        }
        if next.len() > opts.node_budget {
            diagonals.sort_by(|a, b| a.offset.total_cmp(&b.offset));
            let live = next.len();
            return Err(UnfoldError::BudgetExceeded {
                budget: opts.node_budget,
                depth,
                live,
                partial: Box::new(BeamEnumeration {
                    apex,
                    n_max,
                    diagonals,
                    leaves: Vec::new(),
                    completed_depth: Some(depth),
                    partial: true,
                }),
            });
        }
        beams = next
            .into_par_iter()
            .map(|b| {
                let side = b.entry.expect("children always carry their exit side");
                let seg = (b.iso.apply(table.vertex(side)), b.iso.apply(table.vertex(side + 1)));
                let iso = reflect_across_segment(&b.iso, seg).expect("sides are nondegenerate");
                let mut itinerary = b.itinerary;
                itinerary.push(side);
                Beam { iso, itinerary, ..b }
            })
            .collect();
        completed = Some(depth);
    }
    diagonals.sort_by(|a, b| a.offset.total_cmp(&b.offset));
    Ok(BeamEnumeration { apex, n_max, diagonals, leaves, completed_depth: completed, partial: false })
}

/// Number of generalized diagonals from `apex` with at most `n` reflections.
pub fn count_q(table: &Table, apex: usize, n: usize, opts: EnumerationOptions) -> Result<usize, UnfoldError> {
    Ok(propagate_beams(table, apex, n, opts)?.diagonals.len())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Counting {
    /// An orbit and its time reversal count once.
    #[default]
    Unoriented,
    Oriented,
}

/// All diagonals of a table up to `n_max` reflections, with reversal pairing.
#[derive(Debug, Clone)]
pub struct ComplexityCensus {
    pub n_max: usize,
    /// One enumeration per vertex.
    pub per_vertex: Vec<BeamEnumeration>,
    /// `counted[v][i]`: diagonal `i` from vertex `v` represents its unoriented
    /// class (the other orientation, if distinct, is not counted).
    counted: Vec<Vec<bool>>,
    /// Diagonals whose reversal could not be located.
    pub unmatched: usize,
}

pub const REVERSAL_TOLERANCE: f64 = 1e-10;

impl ComplexityCensus {
    pub fn build(table: &Table, n_max: usize, opts: EnumerationOptions) -> Result<Self, UnfoldError> {
        let per_vertex = (0..table.num_vertices())
            .map(|v| propagate_beams(table, v, n_max, opts))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self::from_enumerations(table, per_vertex))
    }

    pub fn from_enumerations(table: &Table, per_vertex: Vec<BeamEnumeration>) -> Self {
        let n_max = per_vertex.iter().map(|e| e.n_max).min().unwrap_or(0);
        let mut counted: Vec<Vec<bool>> =
            per_vertex.iter().map(|e| vec![false; e.diagonals.len()]).collect();
        let mut unmatched = 0;
        for (a, en) in per_vertex.iter().enumerate() {
            for (i, d) in en.diagonals.iter().enumerate() {
                match find_reversal(table, &per_vertex, d) {
                    Some((b, j)) => counted[a][i] = (a, i) <= (b, j),
                    None => {
                        unmatched += 1;
                        counted[a][i] = true;
                    }
                }
            }
        }
        ComplexityCensus { n_max, per_vertex, counted, unmatched }
    }

    pub fn q(&self, vertex: usize, n: usize) -> usize {
        self.per_vertex[vertex].count_up_to(n)
    }

    pub fn p(&self, n: usize, mode: Counting) -> usize {
        self.per_vertex
            .iter()
            .zip(&self.counted)
            .map(|(en, flags)| {
                en.diagonals
                    .iter()
                    .zip(flags)
                    .filter(|(d, &c)| d.reflections <= n && (mode == Counting::Oriented || c))
                    .count()
            })
            .sum()
    }

    /// Representatives of the unoriented classes.
    pub fn unoriented(&self) -> impl Iterator<Item = &GeneralizedDiagonal> {
        self.per_vertex
            .iter()
            .zip(&self.counted)
            .flat_map(|(en, flags)| en.diagonals.iter().zip(flags).filter(|(_, &c)| c).map(|(d, _)| d))
    }
}

fn angle_gap(a: f64, b: f64) -> f64 {
    crate::geometry::wrap_angle(a - b).abs()
}

fn find_reversal(
    table: &Table,
    per_vertex: &[BeamEnumeration],
    d: &GeneralizedDiagonal,
) -> Option<(usize, usize)> {
    let b = d.target;
    let back = Point2::from_angle(d.arrival_direction + std::f64::consts::PI);
    let off = table.sector_offset(b, back);
    let list = &per_vertex.get(b)?.diagonals;
    let start = list.partition_point(|e| e.offset < off - REVERSAL_TOLERANCE);
    list[start..]
        .iter()
        .enumerate()
        .take_while(|(_, e)| e.offset <= off + REVERSAL_TOLERANCE)
        .find(|(_, e)| {
            e.target == d.source
                && e.reflections == d.reflections
                && angle_gap(e.direction, back.angle()) <= REVERSAL_TOLERANCE
        })
        .map(|(j, _)| (b, start + j))
}

/// Number of generalized diagonals of the table with at most `n` reflections.
pub fn count_p(table: &Table, n: usize, mode: Counting, opts: EnumerationOptions) -> Result<usize, UnfoldError> {
    Ok(ComplexityCensus::build(table, n, opts)?.p(n, mode))
}

/// A simulated billiard path.
#[derive(Debug, Clone, PartialEq)]
pub struct OrbitTrace {
    pub itinerary: Itinerary,
    /// Reflection points in the table.
    pub hit_points: Vec<Point2>,
    /// Reflection points carried into the unfolded plane.
    pub unfolded_points: Vec<Point2>,
    /// Position after the last reflection (the start when no reflection happened).
    pub endpoint: Point2,
    /// Direction after the last reflection.
    pub final_direction: Point2,
    /// Maps the table onto the image reached after the last reflection.
    pub unfolding: PlanarIsometry,
    /// Euclidean length of the simulated path.
    pub length: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TraceOutcome {
    Completed(OrbitTrace),
    /// The path reached `vertex` after `after` reflections.
    VertexHit { after: usize, vertex: usize, trace: OrbitTrace },
}

impl TraceOutcome {
    pub fn trace(&self) -> &OrbitTrace {
        match self {
            TraceOutcome::Completed(t) | TraceOutcome::VertexHit { trace: t, .. } => t,
        }
    }
}

/// Bounce `n_reflections` times from `start` in `direction`.
pub fn trace_orbit(
    table: &Table,
    start: Point2,
    direction: Point2,
    n_reflections: usize,
) -> Result<TraceOutcome, GeometryError> {
    let mut d = direction.normalized().ok_or(GeometryError::BadDirection)?;
    let mut p = start;
    let mut unfolding = PlanarIsometry::identity();
    let mut trace = OrbitTrace {
        itinerary: Itinerary::default(),
        hit_points: Vec::with_capacity(n_reflections),
        unfolded_points: Vec::with_capacity(n_reflections),
        endpoint: start,
        final_direction: d,
        unfolding,
        length: 0.0,
    };
    for k in 0..n_reflections {
        match table.ray_exit(p, d)? {
            RayExit::Vertex { vertex, hit, distance } => {
                trace.length += distance;
                trace.endpoint = hit;
                trace.unfolding = unfolding;
                return Ok(TraceOutcome::VertexHit { after: k, vertex, trace });
            }
            RayExit::Side { side, hit, distance } => {
                trace.length += distance;
                trace.itinerary.0.push(side);
                trace.hit_points.push(hit);
                trace.unfolded_points.push(unfolding.apply(hit));
                let seg = table.side(side);
                unfolding = reflect_across_segment(&unfolding, (unfolding.apply(seg.0), unfolding.apply(seg.1)))?;
                d = table.reflect_direction(side, d);
                p = hit;
            }
        }
    }
    trace.endpoint = p;
    trace.final_direction = d;
    trace.unfolding = unfolding;
    Ok(TraceOutcome::Completed(trace))
}

/// Trace from `source` in `direction` for up to `max_reflections`; if the path
/// ends at a vertex, return the corresponding diagonal.
pub fn diagonal_from_vertex(
    table: &Table,
    source: usize,
    direction: Point2,
    max_reflections: usize,
) -> Result<Option<GeneralizedDiagonal>, GeometryError> {
    let d = direction.normalized().ok_or(GeometryError::BadDirection)?;
    let outcome = trace_orbit(table, table.vertex(source), d, max_reflections + 1)?;
    Ok(match outcome {
        TraceOutcome::VertexHit { after, vertex, trace } => {
            let image = trace.unfolding.apply(table.vertex(vertex));
            let arrival = trace.unfolding.inverse().apply_vector(d);
            Some(GeneralizedDiagonal {
                source,
                target: vertex,
                direction: d.angle(),
                offset: table.sector_offset(source, d),
                reflections: after,
                target_vertex_image: image,
                arrival_direction: arrival.angle(),
                itinerary: trace.itinerary,
            })
        }
        TraceOutcome::Completed(_) => None,
    })
}

/// Both sides of the rhombus/triangle comparison.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundCheck {
    pub n: usize,
    /// Rhombus diagonals that fold to a triangle diagonal (or leg) with at
    /// most `3n` reflections.
    pub p_triangle_3n: usize,
    pub p_rhombus_n: usize,
    pub holds: bool,
    /// Triangle diagonals with at most `3n` reflections, by direct enumeration.
    pub p_triangle_3n_direct: usize,
    /// `p_triangle_3n_direct >= p_rhombus_n`. Folding is not injective, so
    /// this can fail for small `n`.
    pub holds_direct: bool,
    pub fold: FoldReport,
}

/// What happened when each rhombus diagonal was folded into the triangle.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct FoldReport {
    /// Folded to a triangle diagonal found by the direct enumeration.
    pub matched: usize,
    /// Folded to a segment along a leg (the rhombus diagonals on its axes).
    pub along_leg: usize,
    /// Passed through the rhombus center, so the triangle orbit ends at the
    /// right-angle vertex early.
    pub through_center: usize,
    /// Folded path was not found among the triangle diagonals.
    pub missing: usize,
    /// Folded reflection count disagreed with the crossing count.
    pub length_mismatch: usize,
    /// Largest triangle length seen, relative to `max(1, rhombus length)`.
    pub max_length_ratio: f64,
    /// Distinct triangle diagonals hit by folding.
    pub distinct_images: usize,
}

/// Compare `P_{3n}` of the right triangle with `P_n` of its rhombus, and fold
/// every rhombus diagonal back into the triangle.
pub fn triangle_complexity_bound_check(
    t: &RightTriangle,
    n: usize,
    opts: EnumerationOptions,
) -> Result<BoundCheck, UnfoldError> {
    let rhombus = crate::geometry::triangle_to_rhombus(t).table();
    let triangle = t.table();
    let rc = ComplexityCensus::build(&rhombus, n, opts)?;
    let tc = ComplexityCensus::build(&triangle, 3 * n, opts)?;
    let p_rhombus_n = rc.p(n, Counting::Unoriented);
    let p_triangle_3n_direct = tc.p(3 * n, Counting::Unoriented);

    let mut fold = FoldReport::default();
    let mut images = std::collections::BTreeSet::new();
    for d in rc.unoriented() {
        match fold_diagonal(&rhombus, &triangle, d, 3 * n + 2)? {
            Folded::AlongLeg => fold.along_leg += 1,
            Folded::Diagonal { diagonal, expected_reflections, through_center } => {
                if through_center {
                    fold.through_center += 1;
                }
                if diagonal.reflections != expected_reflections {
                    fold.length_mismatch += 1;
                }
                let ratio = diagonal.reflections as f64 / d.reflections.max(1) as f64;
                fold.max_length_ratio = fold.max_length_ratio.max(ratio);
                match locate_in(&triangle, &tc, &diagonal) {
                    Some(key) => {
                        fold.matched += 1;
                        images.insert(key);
                    }
                    None => fold.missing += 1,
                }
            }
            Folded::Lost => fold.missing += 1,
        }
    }
    fold.distinct_images = images.len();
    let p_triangle_3n = fold.matched + fold.along_leg;
    Ok(BoundCheck {
        n,
        p_triangle_3n,
        p_rhombus_n,
        holds: p_triangle_3n >= p_rhombus_n,
        p_triangle_3n_direct,
        holds_direct: p_triangle_3n_direct >= p_rhombus_n,
        fold,
    })
}

enum Folded {
    AlongLeg,
    Diagonal { diagonal: GeneralizedDiagonal, expected_reflections: usize, through_center: bool },
    Lost,
}

/// Triangle vertex label of a rhombus vertex (rhombus centred at the right angle).
fn triangle_vertex_of(rhombus_vertex: usize) -> usize {
    if rhombus_vertex.is_multiple_of(2) {
        1
    } else {
        2
    }
}

fn fold_diagonal(
    rhombus: &Table,
    triangle: &Table,
    d: &GeneralizedDiagonal,
    max_reflections: usize,
) -> Result<Folded, GeometryError> {
    let dir = Point2::from_angle(d.direction);
    let src = rhombus.vertex(d.source);
    // Leaving a vertex on an axis: fold the direction by the quadrant of the first segment.
    let probe = src + dir * (1e-3 * rhombus.diameter());
    let sx = if probe.x < 0.0 { -1.0 } else { 1.0 };
    let sy = if probe.y < 0.0 { -1.0 } else { 1.0 };
    let folded_dir = Point2::new(sx * dir.x, sy * dir.y);
    let tri_source = triangle_vertex_of(d.source);
    let eps = triangle.vertex_eps();
    if (folded_dir.x.abs() <= eps || folded_dir.y.abs() <= eps) && d.reflections == 0 {
        return Ok(Folded::AlongLeg);
    }

    // Independent route: count axis crossings along the rhombus path.
    let path = match trace_orbit(rhombus, src, dir, d.reflections + 1)? {
        TraceOutcome::VertexHit { trace, .. } => {
            let mut pts = vec![src];
            pts.extend(trace.hit_points.iter().copied());
            pts.push(rhombus.vertex(d.target));
            pts
        }
        TraceOutcome::Completed(_) => return Ok(Folded::Lost),
    };
    let mut crossings = 0;
    let mut through_center = false;
    let mut bounces = 0;
    'segments: for (si, w) in path.windows(2).enumerate() {
        let (a, b) = (w[0], w[1]);
        let seg = b - a;
        let len = seg.norm();
        // Center on this segment?
        let t_c = (-a).dot(seg) / (len * len);
        if t_c > 1e-12 && t_c < 1.0 - 1e-12 && (a + seg * t_c).norm() <= eps {
            through_center = true;
            crossings += axis_crossings(a, a + seg * t_c, eps);
            break 'segments;
        }
        crossings += axis_crossings(a, b, eps);
        if si + 1 < path.len() - 1 {
            bounces += 1;
        }
    }
    let expected = bounces + crossings;

    let Some(diagonal) = diagonal_from_vertex(triangle, tri_source, folded_dir, max_reflections)? else {
        return Ok(Folded::Lost);
    };
    Ok(Folded::Diagonal { diagonal, expected_reflections: expected, through_center })
}

/// Interior crossings of the coordinate axes by the open segment `(a, b)`.
fn axis_crossings(a: Point2, b: Point2, eps: f64) -> usize {
    let mut n = 0;
    if (a.x > eps && b.x < -eps) || (a.x < -eps && b.x > eps) {
        n += 1;
    }
    if (a.y > eps && b.y < -eps) || (a.y < -eps && b.y > eps) {
        n += 1;
    }
    n
}

fn locate_in(
    table: &Table,
    census: &ComplexityCensus,
    d: &GeneralizedDiagonal,
) -> Option<(usize, usize)> {
    let list = &census.per_vertex.get(d.source)?.diagonals;
    let off = table.sector_offset(d.source, Point2::from_angle(d.direction));
    let tol = 1e-9;
    let start = list.partition_point(|e| e.offset < off - tol);
    let j = list[start..]
        .iter()
        .take_while(|e| e.offset <= off + tol)
        .position(|e| e.reflections == d.reflections && e.target == d.target)?;
    let i = start + j;
    // Report the unoriented class representative.
    find_reversal(table, &census.per_vertex, &list[i])
        .map(|(b, jb)| (d.source, i).min((b, jb)))
        .or(Some((d.source, i)))
}

/// One CSV/JSON record per diagonal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagonalRecord {
    pub source_vertex: usize,
    pub direction_radians: f64,
    pub reflections: usize,
    pub itinerary: String,
    pub target_vertex: usize,
}

impl From<&GeneralizedDiagonal> for DiagonalRecord {
    fn from(d: &GeneralizedDiagonal) -> Self {
        DiagonalRecord {
            source_vertex: d.source,
            direction_radians: d.direction,
            reflections: d.reflections,
            itinerary: d.itinerary.to_string(),
            target_vertex: d.target,
        }
    }
}

pub fn write_diagonals_csv<'a, W: Write>(
    out: W,
    diagonals: impl IntoIterator<Item = &'a GeneralizedDiagonal>,
) -> Result<(), UnfoldError> {
    let mut w = csv::Writer::from_writer(out);
    for d in diagonals {
        w.serialize(DiagonalRecord::from(d))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_diagonals_json<'a, W: Write>(
    out: W,
    diagonals: impl IntoIterator<Item = &'a GeneralizedDiagonal>,
) -> Result<(), UnfoldError> {
    let records: Vec<DiagonalRecord> = diagonals.into_iter().map(DiagonalRecord::from).collect();
    serde_json::to_writer_pretty(out, &records)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Orientation, Rhombus};
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, SQRT_2};

    fn square() -> Table {
        Rhombus::centered(1.0, 1.0).unwrap().table()
    }

    #[test]
    fn square_depth_zero_has_one_diagonal() {
        let t = square();
        let e = propagate_beams(&t, 0, 0, EnumerationOptions::default()).unwrap();
        assert_eq!(e.diagonals.len(), 1);
        let d = &e.diagonals[0];
        assert_eq!(d.target, 2);
        assert_eq!(d.reflections, 0);
        assert!((d.offset - FRAC_PI_4).abs() < 1e-12);
        assert_eq!(e.leaves.len(), 2);
        assert!((e.leaves[0].theta_lo).abs() < 1e-15);
        assert!((e.leaves[0].theta_hi - FRAC_PI_4).abs() < 1e-12);
        assert!((e.leaves[1].theta_hi - FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn leaves_tile_the_vertex_angle() {
        let t = Rhombus::centered(1.0, 0.37).unwrap().table();
        for apex in 0..4 {
            let e = propagate_beams(&t, apex, 5, EnumerationOptions::default()).unwrap();
            assert_eq!(e.leaves.len(), e.diagonals.len() + 1);
            assert!(e.leaves[0].theta_lo == 0.0);
            assert!((e.leaves.last().unwrap().theta_hi - t.vertex_angle(apex)).abs() < 1e-15);
            for (w, d) in e.leaves.windows(2).zip(&e.diagonals) {
                assert_eq!(w[0].theta_hi, w[1].theta_lo);
                assert_eq!(w[0].theta_hi, d.offset);
            }
            for l in &e.leaves {
                assert!(l.node.itinerary.is_valid());
                assert_eq!(l.node.itinerary.len(), 5);
                assert_eq!(l.node.iso.orientation(), if 5 % 2 == 0 { Orientation::Preserving } else { Orientation::Reversing });
            }
        }
    }

    #[test]
    fn q_is_monotone() {
        let t = Rhombus::centered(1.0, 0.61).unwrap().table();
        let e = propagate_beams(&t, 1, 20, EnumerationOptions::default()).unwrap();
        let q: Vec<usize> = (0..=20).map(|n| e.count_up_to(n)).collect();
        assert!(q.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn square_p0_counts_both_interior_diagonals() {
        assert_eq!(count_p(&square(), 0, Counting::Unoriented, EnumerationOptions::default()).unwrap(), 2);
        assert_eq!(count_p(&square(), 0, Counting::Oriented, EnumerationOptions::default()).unwrap(), 4);
    }

    #[test]
    fn p_dominates_q() {
        let t = Rhombus::centered(1.0, 0.43).unwrap().table();
        let c = ComplexityCensus::build(&t, 8, EnumerationOptions::default()).unwrap();
        assert_eq!(c.unmatched, 0);
        for n in 0..=8 {
            for v in 0..4 {
                assert!(c.p(n, Counting::Unoriented) >= c.q(v, n));
            }
        }
    }

    #[test]
    fn budget_error_keeps_partial_results() {
        let t = Rhombus::centered(1.0, 0.43).unwrap().table();
        match propagate_beams(&t, 0, 30, EnumerationOptions { node_budget: 50 }) {
            Err(UnfoldError::BudgetExceeded { partial, depth, .. }) => {
                assert!(partial.partial);
                assert!(depth < 30);
                assert!(partial.diagonals.iter().all(|d| d.reflections <= depth));
            }
            other => panic!("expected budget error, got {other:?}"),
        }
    }

    #[test]
    fn normal_incidence_bounces_between_parallel_sides() {
        // Axis-aligned square: sides 3 (right) and 1 (left) are vertical, 0 (top) and 2 (bottom) horizontal.
        let pose = PlanarIsometry::new(FRAC_PI_4, Point2::ORIGIN, Orientation::Preserving);
        let t = Rhombus::new(1.0, 1.0, pose).unwrap().table();
        let start = Point2::new(0.2, -SQRT_2 / 2.0);
        let out = trace_orbit(&t, start, Point2::new(0.0, 1.0), 6).unwrap();
        let TraceOutcome::Completed(tr) = out else { panic!("no vertex expected") };
        assert_eq!(tr.itinerary.0, vec![0, 2, 0, 2, 0, 2]);
        assert!(tr.endpoint.dist(start) < 1e-12);
    }

    #[test]
    fn unfolded_points_are_collinear() {
        let t = Rhombus::centered(1.2, 0.5).unwrap().table();
        let start = Point2::new(0.1, 0.05);
        let d = Point2::from_angle(0.913);
        let TraceOutcome::Completed(tr) = trace_orbit(&t, start, d, 40).unwrap() else { panic!() };
        for p in &tr.unfolded_points {
            assert!(d.cross(*p - start).abs() < 1e-9 * tr.length);
        }
    }

    #[test]
    fn trace_from_vertex_along_diagonal_hits_vertex() {
        let t = square();
        match trace_orbit(&t, Point2::new(-1.0, 0.0), Point2::new(1.0, 0.0), 3).unwrap() {
            TraceOutcome::VertexHit { after, vertex, .. } => {
                assert_eq!(after, 0);
                assert_eq!(vertex, 0);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn diagonals_are_billiard_orbits_and_reverse() {
        let t = Rhombus::centered(1.0, 0.71).unwrap().table();
        let e = propagate_beams(&t, 3, 7, EnumerationOptions::default()).unwrap();
        for d in &e.diagonals {
            let dir = Point2::from_angle(d.direction);
            let found = diagonal_from_vertex(&t, 3, dir, d.reflections).unwrap().expect("ends at vertex");
            assert_eq!(found.reflections, d.reflections);
            assert_eq!(found.target, d.target);
            assert_eq!(found.itinerary, d.itinerary);
            let back = Point2::from_angle(d.arrival_direction + std::f64::consts::PI);
            let rev = diagonal_from_vertex(&t, d.target, back, d.reflections).unwrap().expect("reverse");
            assert_eq!(rev.target, 3);
            assert_eq!(rev.itinerary, d.itinerary.reversed());
        }
    }

    #[test]
    fn isoceles_bound_check_at_zero() {
        let tri = RightTriangle::new(FRAC_PI_4, 1.0).unwrap();
        let c = triangle_complexity_bound_check(&tri, 0, EnumerationOptions::default()).unwrap();
        assert_eq!(c.p_rhombus_n, 2);
        assert_eq!(c.fold.along_leg, 2);
    }

    #[test]
    fn itinerary_display() {
        assert_eq!(Itinerary(vec![0, 2, 1]).to_string(), "0-2-1");
        assert_eq!(Itinerary::default().to_string(), "");
    }
}
