//! Planar geometry for the billiard tables: points, rigid motions, the right
//! triangle and its rhombus, and convex tables with a ray exit query.
//!
//! Everything is `f64`. A single tolerance policy applies everywhere: a point
//! within `vertex_eps` of a vertex *is* that vertex, and a point within
//! `line_eps` of a side line lies on it. Both scale with the table diameter.

use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GeometryError {
    #[error("angle {value} is outside the open interval ({lo}, {hi})")]
    AngleOutOfRange { value: f64, lo: f64, hi: f64 },
    #[error("length must be positive and finite, got {0}")]
    NonPositiveLength(f64),
    #[error("segment endpoints coincide")]
    DegenerateSegment,
    #[error("ray origin lies outside the table")]
    OriginOutside,
    #[error("direction points out of the table from a boundary origin")]
    DirectionOutward,
    #[error("direction vector is zero or not finite")]
    BadDirection,
    #[error("polygon must be convex, counterclockwise, with at least 3 vertices")]
    NotConvex,
    #[error("no vertex with id {0}")]
    NoSuchVertex(usize),
}

/// A point (or free vector) in the plane.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const ORIGIN: Point2 = Point2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }

    /// Unit vector at angle `theta` from the positive x axis.
    pub fn from_angle(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Point2 { x: c, y: s }
    }

    pub fn dot(self, o: Point2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z component of the 3d cross product.
    pub fn cross(self, o: Point2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, o: Point2) -> f64 {
        (self - o).norm()
    }

    pub fn normalized(self) -> Option<Point2> {
        let n = self.norm();
        (n > 0.0 && n.is_finite()).then(|| Point2::new(self.x / n, self.y / n))
    }

    /// Counterclockwise quarter turn.
    pub fn perp(self) -> Point2 {
        Point2::new(-self.y, self.x)
    }

    pub fn rotated(self, theta: f64) -> Point2 {
        let (s, c) = theta.sin_cos();
        Point2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, o: Point2) -> Point2 {
        Point2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, k: f64) -> Point2 {
        Point2::new(self.x * k, self.y * k)
    }
}

impl Neg for Point2 {
    type Output = Point2;
    fn neg(self) -> Point2 {
        Point2::new(-self.x, -self.y)
    }
}

impl fmt::Display for Point2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Wrap an angle into `(-π, π]`.
pub fn wrap_angle(theta: f64) -> f64 {
    let mut t = theta.rem_euclid(TAU);
    if t > PI {
        t -= TAU;
    }
    t
}

/// An angle strictly inside an open interval, in radians.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Angle(f64);

impl Angle {
    pub fn in_range(radians: f64, lo: f64, hi: f64) -> Result<Self, GeometryError> {
        if radians.is_finite() && radians > lo && radians < hi {
            Ok(Angle(radians))
        } else {
            Err(GeometryError::AngleOutOfRange { value: radians, lo, hi })
        }
    }

    /// An angle in `(0, π)`.
    pub fn new(radians: f64) -> Result<Self, GeometryError> {
        Self::in_range(radians, 0.0, PI)
    }

    /// An angle in `(0, π/2)`.
    pub fn acute(radians: f64) -> Result<Self, GeometryError> {
        Self::in_range(radians, 0.0, FRAC_PI_2)
    }

    pub fn radians(self) -> f64 {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Orientation {
    Preserving,
    Reversing,
}

impl Orientation {
    pub fn sign(self) -> f64 {
        match self {
            Orientation::Preserving => 1.0,
            Orientation::Reversing => -1.0,
        }
    }

    pub fn flip(self) -> Self {
        match self {
            Orientation::Preserving => Orientation::Reversing,
            Orientation::Reversing => Orientation::Preserving,
        }
    }

    pub fn compose(self, other: Orientation) -> Orientation {
        if self == other {
            Orientation::Preserving
        } else {
            Orientation::Reversing
        }
    }
}

/// A rigid motion `p ↦ R(rotation) · F · p + translation`, where `F` is the
/// identity for orientation-preserving maps and the flip `(x, y) ↦ (x, -y)`
/// otherwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanarIsometry {
    rotation: f64,
    cos: f64,
    sin: f64,
    orientation: Orientation,
    translation: Point2,
}

impl Default for PlanarIsometry {
    fn default() -> Self {
        Self::identity()
    }
}

impl PlanarIsometry {
    pub fn identity() -> Self {
        Self::new(0.0, Point2::ORIGIN, Orientation::Preserving)
    }

    pub fn new(rotation: f64, translation: Point2, orientation: Orientation) -> Self {
        let rotation = wrap_angle(rotation);
        let (sin, cos) = rotation.sin_cos();
        PlanarIsometry { rotation, cos, sin, orientation, translation }
    }

    pub fn rotation_about(center: Point2, theta: f64) -> Self {
        let t = center - center.rotated(theta);
        Self::new(theta, t, Orientation::Preserving)
    }

    pub fn translation_by(t: Point2) -> Self {
        Self::new(0.0, t, Orientation::Preserving)
    }

    /// Reflection across the line through `a` and `b`.
    pub fn reflection(a: Point2, b: Point2) -> Result<Self, GeometryError> {
        let dir = b - a;
        if !(dir.norm() > 0.0) {
            return Err(GeometryError::DegenerateSegment);
        }
        let two_phi = 2.0 * dir.angle();
        let lin = PlanarIsometry::new(two_phi, Point2::ORIGIN, Orientation::Reversing);
        let t = a - lin.apply_vector(a);
        Ok(PlanarIsometry::new(two_phi, t, Orientation::Reversing))
    }

    pub fn rotation(&self) -> f64 {
        self.rotation
    }

    pub fn translation(&self) -> Point2 {
        self.translation
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn apply_vector(&self, v: Point2) -> Point2 {
        let y = v.y * self.orientation.sign();
        Point2::new(self.cos * v.x - self.sin * y, self.sin * v.x + self.cos * y)
    }

    pub fn apply(&self, p: Point2) -> Point2 {
        self.apply_vector(p) + self.translation
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &PlanarIsometry) -> PlanarIsometry {
        let rotation = self.rotation + self.orientation.sign() * other.rotation;
        let orientation = self.orientation.compose(other.orientation);
        let translation = self.apply(other.translation);
        PlanarIsometry::new(rotation, translation, orientation)
    }

    pub fn inverse(&self) -> PlanarIsometry {
        let o = self.orientation.sign();
        let rotation = -o * self.rotation;
        let lin = PlanarIsometry::new(rotation, Point2::ORIGIN, self.orientation);
        let translation = -lin.apply_vector(self.translation);
        PlanarIsometry::new(rotation, translation, self.orientation)
    }
}

/// Reflect across the supporting line of `seg`, after `iso`.
pub fn reflect_across_segment(
    iso: &PlanarIsometry,
    seg: (Point2, Point2),
) -> Result<PlanarIsometry, GeometryError> {
    Ok(PlanarIsometry::reflection(seg.0, seg.1)?.compose(iso))
}

/// Relative tolerances, multiplied by the table diameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub vertex_rel: f64,
    pub line_rel: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { vertex_rel: 1e-9, line_rel: 1e-12 }
    }
}

/// Where a point sits relative to a table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Location {
    Inside,
    OnSide(usize),
    AtVertex(usize),
    Outside,
}

/// First boundary point met by a ray.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RayExit {
    Side { side: usize, hit: Point2, distance: f64 },
    Vertex { vertex: usize, hit: Point2, distance: f64 },
}

impl RayExit {
    pub fn hit(&self) -> Point2 {
        match *self {
            RayExit::Side { hit, .. } | RayExit::Vertex { hit, .. } => hit,
        }
    }

    pub fn distance(&self) -> f64 {
        match *self {
            RayExit::Side { distance, .. } | RayExit::Vertex { distance, .. } => distance,
        }
    }
}

/// A convex billiard table with counterclockwise vertices.
///
/// Side `i` runs from vertex `i` to vertex `i + 1 (mod k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    vertices: Vec<Point2>,
    tol: Tolerances,
    diameter: f64,
}

impl Table {
    pub fn new(vertices: Vec<Point2>, tol: Tolerances) -> Result<Self, GeometryError> {
        let k = vertices.len();
        if k < 3 || vertices.iter().any(|v| !v.is_finite()) {
            return Err(GeometryError::NotConvex);
        }
        for i in 0..k {
            let a = vertices[i];
            let b = vertices[(i + 1) % k];
            let c = vertices[(i + 2) % k];
            if (b - a).cross(c - b) <= 0.0 {
                return Err(GeometryError::NotConvex);
            }
        }
        let mut diameter: f64 = 0.0;
        for i in 0..k {
            for j in i + 1..k {
                diameter = diameter.max(vertices[i].dist(vertices[j]));
            }
        }
        Ok(Table { vertices, tol, diameter })
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn vertex(&self, i: usize) -> Point2 {
        self.vertices[i % self.vertices.len()]
    }

    pub fn side(&self, i: usize) -> (Point2, Point2) {
        (self.vertex(i), self.vertex(i + 1))
    }

    pub fn side_length(&self, i: usize) -> f64 {
        let (a, b) = self.side(i);
        a.dist(b)
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    pub fn tolerances(&self) -> Tolerances {
        self.tol
    }

    pub fn with_tolerances(mut self, tol: Tolerances) -> Self {
        self.tol = tol;
        self
    }

    pub fn vertex_eps(&self) -> f64 {
        self.tol.vertex_rel * self.diameter
    }

    pub fn line_eps(&self) -> f64 {
        self.tol.line_rel * self.diameter
    }

    /// Interior angle at vertex `i`.
    pub fn vertex_angle(&self, i: usize) -> f64 {
        let v = self.vertex(i);
        let next = self.vertex(i + 1) - v;
        let prev = self.vertex(i + self.num_vertices() - 1) - v;
        next.cross(prev).atan2(next.dot(prev))
    }

    /// Unit vector along the clockwise edge of the interior angle at `i`
    /// (towards vertex `i + 1`). Offsets inside the vertex angle are
    /// measured counterclockwise from it.
    pub fn sector_start(&self, i: usize) -> Point2 {
        (self.vertex(i + 1) - self.vertex(i)).normalized().expect("convex table")
    }

    /// Offset of direction `d` inside the angle at vertex `i`, in radians.
    /// Values in `(0, vertex_angle)` point into the table.
    pub fn sector_offset(&self, i: usize, d: Point2) -> f64 {
        let u = self.sector_start(i);
        u.cross(d).atan2(u.dot(d))
    }

    pub fn locate(&self, p: Point2) -> Location {
        let veps = self.vertex_eps();
        for (i, v) in self.vertices.iter().enumerate() {
            if v.dist(p) <= veps {
                return Location::AtVertex(i);
            }
        }
        let leps = self.line_eps();
        let mut on = None;
        for i in 0..self.num_vertices() {
            let (a, b) = self.side(i);
            let e = b - a;
            let signed = e.cross(p - a) / e.norm();
            if signed < -leps {
                return Location::Outside;
            }
            if signed <= leps && on.is_none() {
                on = Some(i);
            }
        }
        match on {
            Some(i) => Location::OnSide(i),
            None => Location::Inside,
        }
    }

    /// First boundary intersection of the ray `origin + t·direction`, `t > 0`.
    pub fn ray_exit(&self, origin: Point2, direction: Point2) -> Result<RayExit, GeometryError> {
        let d = direction.normalized().ok_or(GeometryError::BadDirection)?;
        match self.locate(origin) {
            Location::Outside => return Err(GeometryError::OriginOutside),
            Location::Inside => {}
            Location::OnSide(i) => {
                let (a, b) = self.side(i);
                if (b - a).cross(d) <= 0.0 {
                    return Err(GeometryError::DirectionOutward);
                }
            }
            Location::AtVertex(i) => {
                let v = self.vertex(i);
                let next = self.vertex(i + 1) - v;
                let prev = self.vertex(i + self.num_vertices() - 1) - v;
                if next.cross(d) <= 0.0 || d.cross(prev) <= 0.0 {
                    return Err(GeometryError::DirectionOutward);
                }
            }
        }
        let mut best: Option<(usize, f64)> = None;
        for i in 0..self.num_vertices() {
            let (a, b) = self.side(i);
            let e = b - a;
            let denom = e.cross(d);
            if denom >= 0.0 {
                continue;
            }
            let t = e.cross(a - origin) / denom;
            if best.is_none_or(|(_, bt)| t < bt) {
                best = Some((i, t));
            }
        }
        let (side, t) = best.ok_or(GeometryError::BadDirection)?;
        let t = t.max(0.0);
        let hit = origin + d * t;
        let veps = self.vertex_eps();
        for (vi, v) in self.vertices.iter().enumerate() {
            if v.dist(hit) <= veps && v.dist(origin) > veps {
                return Ok(RayExit::Vertex { vertex: vi, hit: *v, distance: origin.dist(*v) });
            }
        }
        Ok(RayExit::Side { side, hit, distance: t })
    }

    /// The image of this table under `iso`, with the same vertex labels.
    pub fn vertex_images(&self, iso: &PlanarIsometry) -> Vec<Point2> {
        self.vertices.iter().map(|&v| iso.apply(v)).collect()
    }

    /// Reflect a direction off side `i`.
    pub fn reflect_direction(&self, i: usize, d: Point2) -> Point2 {
        let (a, b) = self.side(i);
        let u = (b - a).normalized().expect("nondegenerate side");
        u * (2.0 * d.dot(u)) - d
    }
}

/// A right triangle with its right angle at the origin, the acute vertex on
/// the positive x axis and the remaining vertex on the positive y axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RightTriangle {
    pub acute_angle: Angle,
    pub leg_adjacent: f64,
}

impl RightTriangle {
    pub fn new(acute_angle: f64, leg_adjacent: f64) -> Result<Self, GeometryError> {
        let acute_angle = Angle::acute(acute_angle)?;
        if !(leg_adjacent > 0.0 && leg_adjacent.is_finite()) {
            return Err(GeometryError::NonPositiveLength(leg_adjacent));
        }
        Ok(RightTriangle { acute_angle, leg_adjacent })
    }

    pub fn leg_opposite(&self) -> f64 {
        self.leg_adjacent * self.acute_angle.radians().tan()
    }

    /// The three angles: right angle, the acute angle, its complement.
    pub fn angles(&self) -> [f64; 3] {
        let a = self.acute_angle.radians();
        [FRAC_PI_2, a, FRAC_PI_2 - a]
    }

    /// Vertices: 0 = right angle, 1 = acute vertex, 2 = complementary vertex.
    pub fn table(&self) -> Table {
        self.table_with(Tolerances::default())
    }

    pub fn table_with(&self, tol: Tolerances) -> Table {
        Table::new(
            vec![
                Point2::ORIGIN,
                Point2::new(self.leg_adjacent, 0.0),
                Point2::new(0.0, self.leg_opposite()),
            ],
            tol,
        )
        .expect("a valid right triangle is convex")
    }
}

/// A rhombus with vertices at the images of `(h, 0)`, `(0, v)`, `(-h, 0)`,
/// `(0, -v)` under an orientation-preserving pose (labels 0..3, CCW).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rhombus {
    pub half_diagonal_h: f64,
    pub half_diagonal_v: f64,
    pub pose: PlanarIsometry,
}

impl Rhombus {
    /// An orientation-reversing pose is replaced by the preserving pose with
    /// the same image set; this swaps the labels of vertices 1 and 3.
    pub fn new(half_h: f64, half_v: f64, pose: PlanarIsometry) -> Result<Self, GeometryError> {
        for l in [half_h, half_v] {
            if !(l > 0.0 && l.is_finite()) {
                return Err(GeometryError::NonPositiveLength(l));
            }
        }
        let pose = match pose.orientation() {
            Orientation::Preserving => pose,
            Orientation::Reversing => PlanarIsometry::new(
                pose.rotation(),
                pose.translation(),
                Orientation::Preserving,
            ),
        };
        Ok(Rhombus { half_diagonal_h: half_h, half_diagonal_v: half_v, pose })
    }

    /// Axis-aligned diagonals, centred at the origin.
    pub fn centered(half_h: f64, half_v: f64) -> Result<Self, GeometryError> {
        Self::new(half_h, half_v, PlanarIsometry::identity())
    }

    /// The rhombus whose angle at vertices 0 and 2 is `alpha`, with unit side.
    pub fn with_angle(alpha: Angle) -> Self {
        let half = alpha.radians() / 2.0;
        Rhombus::centered(half.cos(), half.sin()).expect("positive half diagonals")
    }

    pub fn local_vertices(&self) -> [Point2; 4] {
        let (h, v) = (self.half_diagonal_h, self.half_diagonal_v);
        [Point2::new(h, 0.0), Point2::new(0.0, v), Point2::new(-h, 0.0), Point2::new(0.0, -v)]
    }

    pub fn vertices(&self) -> [Point2; 4] {
        self.local_vertices().map(|p| self.pose.apply(p))
    }

    pub fn center(&self) -> Point2 {
        self.pose.translation()
    }

    /// Interior angle at vertices 0 and 2.
    pub fn vertex_angle_h(&self) -> f64 {
        2.0 * (self.half_diagonal_v / self.half_diagonal_h).atan()
    }

    /// Interior angle at vertices 1 and 3.
    pub fn vertex_angle_v(&self) -> f64 {
        PI - self.vertex_angle_h()
    }

    pub fn side_length(&self) -> f64 {
        self.half_diagonal_h.hypot(self.half_diagonal_v)
    }

    pub fn table(&self) -> Table {
        self.table_with(Tolerances::default())
    }

    pub fn table_with(&self, tol: Tolerances) -> Table {
        Table::new(self.vertices().to_vec(), tol).expect("a rhombus is convex")
    }

    pub fn ray_exit(&self, origin: Point2, direction: Point2) -> Result<RayExit, GeometryError> {
        self.table().ray_exit(origin, direction)
    }
}

/// Reflect the triangle about both legs: the rhombus has half-diagonals equal
/// to the legs and angle `2·acute_angle` at vertices 0 and 2.
pub fn triangle_to_rhombus(t: &RightTriangle) -> Rhombus {
    Rhombus::centered(t.leg_adjacent, t.leg_opposite()).expect("legs are positive")
}
