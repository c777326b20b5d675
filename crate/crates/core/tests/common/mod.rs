//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use billiard_complexity::{Angle, Point2, Rhombus, Table};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Rhombus angles drawn away from rational multiples of π with small denominators.
pub fn seeded_rhombus(seed: u64) -> Rhombus {
    let a = rng(seed).gen_range(0.4..2.7);
    Rhombus::with_angle(Angle::new(a).unwrap())
}

/// Sides hit by a straight bounce path, computed with plain line algebra.
/// `None` when a hit lands within `eps` of a vertex.
pub fn bounce_sides(vertices: &[Point2], start: Point2, dir: Point2, hits: usize, eps: f64) -> Option<Vec<usize>> {
    let m = vertices.len();
    let (mut p, mut d) = (start, dir);
    let mut out = Vec::with_capacity(hits);
    let mut last: Option<usize> = None;
    for _ in 0..hits {
        let mut best: Option<(f64, usize, f64)> = None;
        for i in 0..m {
            if Some(i) == last {
                continue;
            }
            let a = vertices[i];
            let e = vertices[(i + 1) % m] - a;
            let den = d.cross(e);
            if den.abs() < 1e-300 {
                continue;
            }
            let w = a - p;
            let t = w.cross(e) / den;
            let u = w.cross(d) / den;
            if t > 1e-12 && (-1e-9..=1.0 + 1e-9).contains(&u) && best.is_none_or(|b| t < b.0) {
                best = Some((t, i, u));
            }
        }
        let (t, i, u) = best?;
        let len = (vertices[(i + 1) % m] - vertices[i]).norm();
        if u * len < eps || (1.0 - u) * len < eps {
            return None;
        }
        p = p + d * t;
        let e = (vertices[(i + 1) % m] - vertices[i]) * (1.0 / len);
        d = e * (2.0 * d.dot(e)) - d;
        out.push(i);
        last = Some(i);
    }
    Some(out)
}

/// Diagonals from `vertex` with at most `n` reflections, counted as the
/// places where the first `n + 1` sides hit change along a dense scan of the
/// vertex angle. Returns the sorted change directions (sector offsets).
pub fn scan_diagonals(table: &Table, vertex: usize, n: usize, samples: usize) -> Vec<f64> {
    let verts = table.vertices().to_vec();
    let apex = table.vertex(vertex);
    let start = table.sector_start(vertex);
    let angle = table.vertex_angle(vertex);
    let eps = 1e-13 * table.diameter();
    let sides = |off: f64| bounce_sides(&verts, apex, start.rotated(off), n + 1, eps);
    let mut changes = Vec::new();
    let mut prev_off = 0.0;
    let mut prev: Option<Vec<usize>> = None;
    for k in 1..samples {
        let off = angle * k as f64 / samples as f64;
        let Some(cur) = sides(off) else { continue };
        if let Some(pv) = &prev {
            if *pv != cur {
                refine(&sides, prev_off, pv.clone(), off, cur.clone(), &mut changes);
            }
        }
        prev = Some(cur);
        prev_off = off;
    }
    changes
}

fn refine<F: Fn(f64) -> Option<Vec<usize>>>(
    sides: &F,
    lo: f64,
    slo: Vec<usize>,
    hi: f64,
    shi: Vec<usize>,
    out: &mut Vec<f64>,
) {
    if hi - lo < 1e-13 {
        out.push(0.5 * (lo + hi));
        return;
    }
    let mid = 0.5 * (lo + hi);
    match sides(mid) {
        Some(smid) => {
            if smid != slo {
                refine(sides, lo, slo, mid, smid.clone(), out);
            }
            if smid != shi {
                refine(sides, mid, smid, hi, shi, out);
            }
        }
        // The midpoint is itself (close to) a diagonal direction.
        None => {
            let l = mid - 1e-12;
            let r = mid + 1e-12;
            if let (Some(sl), Some(sr)) = (sides(l), sides(r)) {
                if sl != slo {
                    refine(sides, lo, slo, l, sl.clone(), out);
                }
                if sl != sr {
                    out.push(mid);
                }
                if sr != shi {
                    refine(sides, r, sr, hi, shi, out);
                }
            } else {
                out.push(mid);
            }
        }
    }
}

/// Whether a straight path from `source` in `dir` reaches vertex `target`
/// after exactly `reflections` reflections.
pub fn reaches_vertex(table: &Table, source: usize, dir: Point2, reflections: usize, target: usize) -> bool {
    let verts = table.vertices().to_vec();
    let m = verts.len();
    let (mut p, mut d) = (table.vertex(source), dir.normalized().unwrap());
    let tol = 1e-7 * table.diameter();
    let mut last: Option<usize> = None;
    for k in 0..=reflections {
        let mut best: Option<(f64, usize)> = None;
        for i in 0..m {
            if Some(i) == last {
                continue;
            }
            let a = verts[i];
            let e = verts[(i + 1) % m] - a;
            let den = d.cross(e);
            if den.abs() < 1e-300 {
                continue;
            }
            let w = a - p;
            let t = w.cross(e) / den;
            let u = w.cross(d) / den;
            if t > 1e-9 && (-1e-6..=1.0 + 1e-6).contains(&u) && best.is_none_or(|b| t < b.0) {
                best = Some((t, i));
            }
        }
        let Some((t, i)) = best else { return false };
        p = p + d * t;
        if k == reflections {
            return p.dist(verts[target]) < tol;
        }
        if verts.iter().any(|v| v.dist(p) < 1e-12 * table.diameter()) {
            return false;
        }
        let e = (verts[(i + 1) % m] - verts[i]).normalized().unwrap();
        d = e * (2.0 * d.dot(e)) - d;
        last = Some(i);
    }
    false
}
