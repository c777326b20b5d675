//! From a good interval of the apex partition to a new diagonal.
//!
//! The apex beam through a good interval is narrowed to a parallel beam,
//! which the development map carries until it overlaps itself. The closed
//! orbit found that way is dragged sideways until it meets a vertex; the
//! diagonal it leaves behind is compared with the interval.

use super::config::ExperimentConfig;
use super::ExperimentError;
use crate::devmap::{
    certificate_to_billiard_orbit, drag_orbit, find_periodic_in_beam, BeamInterval, BeamSearch, DevPoint, DevStep,
    DragOutcome, PeriodicOrbit, RotatedFamily, VertexPair, dev_step,
};
use crate::geometry::Orientation;
use crate::partition::{
    beam_width, build_partition, critical_gamma, find_good_interval, GoodInterval, IndexedPartition,
};
use crate::unfolding::{propagate_beams, trace_orbit, EnumerationOptions, GeneralizedDiagonal, TraceOutcome, UnfoldError};
use crate::{PlanarIsometry, Point2, Rhombus, Table};
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct DragAttempt {
    pub step: f64,
    pub outcome: DragOutcome,
    /// Normalized direction of the new diagonal at vertex 0, when it has an
    /// end there.
    pub apex_offset: Option<f64>,
    pub inside_interval: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct PipelineReport {
    pub angle: f64,
    pub n: usize,
    pub gamma: f64,
    pub c: f64,
    pub critical_gamma: f64,
    pub partition_cuts: usize,
    pub interval: GoodInterval,
    /// The search failed and the widest interval was used instead.
    pub fallback_interval: bool,
    pub conclusions_hold: Option<bool>,
    /// Direction of the interval's midpoint, in the table frame.
    pub theta_mid: f64,
    pub mu: f64,
    /// The beam arc was cut at a vertex of the side it starts on.
    pub mu_clipped: bool,
    /// Number of development steps before the parallel beam fits.
    pub j0: Option<usize>,
    pub beam: Option<BeamInterval>,
    pub search: Option<BeamSearch>,
    /// The overlap happened within `n − j0` further steps.
    pub within_level: Option<bool>,
    pub orbit: Option<PeriodicOrbit>,
    pub drags: Vec<DragAttempt>,
    /// Some drag ended on a diagonal at vertex 0 pointing into the interval.
    pub recovered: bool,
}

/// The widest interval of the partition, with index 0 at the ends 0 and 1.
fn widest_interval(p: &IndexedPartition) -> GoodInterval {
    let b = p.boundaries();
    let mut idx = vec![0];
    idx.extend_from_slice(p.indices());
    idx.push(0);
    let k = (0..b.len() - 1)
        .max_by(|&i, &j| (b[i + 1] - b[i]).total_cmp(&(b[j + 1] - b[j])))
        .expect("boundaries include 0 and 1");
    GoodInterval { left: b[k], right: b[k + 1], left_index: idx[k], right_index: idx[k + 1] }
}

fn apex_offset(table: &Table, d: &GeneralizedDiagonal) -> Option<f64> {
    let angle = table.vertex_angle(0);
    if d.source == 0 {
        Some(d.offset / angle)
    } else if d.target == 0 {
        let back = Point2::from_angle(d.arrival_direction) * -1.0;
        Some(table.sector_offset(0, back) / angle)
    } else {
        None
    }
}

pub fn run_pipeline(cfg: &ExperimentConfig, warnings: &mut Vec<String>) -> Result<PipelineReport, ExperimentError> {
    let gc = critical_gamma();
    if cfg.gamma >= gc {
        return Err(ExperimentError::Precondition(format!(
            "gamma = {} violates (-3-eps)(1/(gamma+1) - gamma - 1) < 1/(gamma+1); it must be below {gc}",
            cfg.gamma
        )));
    }
    let rhombus = cfg.build_rhombus()?;
    let table = rhombus.table_with(cfg.tolerances());
    let n = cfg.n_max;
    let en = match propagate_beams(&table, 0, n, EnumerationOptions { node_budget: cfg.node_budget }) {
        Ok(e) => e,
        Err(UnfoldError::BudgetExceeded { budget, .. }) => {
            return Err(ExperimentError::Precondition(format!("node budget {budget} too small for level {n}")))
        }
        Err(e) => return Err(e.into()),
    };
    let vertex_angle = table.vertex_angle(0);
    let partition = build_partition(&en.diagonals, crate::Angle::in_range(vertex_angle, 0.0, std::f64::consts::PI)?, n)?;
    let (interval, fallback, conclusions) = match find_good_interval(&partition, cfg.gamma, cfg.c)? {
        Ok(s) => (s.interval, false, Some(s.conclusions_hold())),
        Err(reason) => {
            warnings.push(format!("no good interval ({reason:?}); using the widest interval"));
            (widest_interval(&partition), true, None)
        }
    };
    let t_mid = 0.5 * (interval.left + interval.right);
    let width = (interval.right - interval.left) * vertex_angle;
    let d_mid = table.sector_start(0).rotated(t_mid * vertex_angle);
    let theta_mid = d_mid.angle();
    let mu = beam_width(n, cfg.gamma, cfg.c);

    let mut report = PipelineReport {
        angle: cfg.resolved_angle(),
        n,
        gamma: cfg.gamma,
        c: cfg.c,
        critical_gamma: gc,
        partition_cuts: partition.len(),
        interval,
        fallback_interval: fallback,
        conclusions_hold: conclusions,
        theta_mid,
        mu,
        mu_clipped: false,
        j0: None,
        beam: None,
        search: None,
        within_level: None,
        orbit: None,
        drags: Vec::new(),
        recovered: false,
    };

    // The rhombus turned so that the middle direction is horizontal.
    let turned = Rhombus::new(
        rhombus.half_diagonal_h,
        rhombus.half_diagonal_v,
        PlanarIsometry::new(-theta_mid, Point2::ORIGIN, Orientation::Preserving),
    )?;
    let fam = RotatedFamily::new(turned, VertexPair::Horizontal);
    let turned_table = turned.table_with(cfg.tolerances());
    let trace = match trace_orbit(&turned_table, turned_table.vertex(0), Point2::new(1.0, 0.0), n)? {
        TraceOutcome::Completed(t) => t,
        TraceOutcome::VertexHit { after, vertex, trace } => {
            warnings.push(format!("middle ray meets vertex {vertex} after {after} reflections"));
            trace
        }
    };

    // Walk the middle ray through the development until the parallel beam
    // of width μ lies inside the apex beam.
    let first = trace.itinerary.0.first().copied();
    let mut point = first.map(|j| {
        let (a, _) = turned_table.side(j);
        DevPoint {
            level: crate::devmap::level_delta(j),
            side: 3 - j,
            s: fam.side_length() - trace.hit_points[0].dist(a),
        }
    });
    let mut travelled = 0.0;
    let mut prev = turned_table.vertex(0);
    for (j, &hit) in trace.hit_points.iter().enumerate() {
        let Some(x) = point else { break };
        travelled += hit.dist(prev);
        prev = hit;
        let v = fam.level_vertices(x.level);
        let u = (v[(x.side + 1) % 4] - v[x.side]) * (1.0 / fam.side_length());
        let back = travelled - 0.5 * mu * (u.x / u.y).abs();
        if back >= 0.5 * mu / (0.5 * width).tan() {
            let half = 0.5 * mu / u.y.abs();
            let (lo, hi) = ((x.s - half).max(0.0), (x.s + half).min(fam.side_length()));
            report.mu_clipped = lo > x.s - half || hi < x.s + half;
            report.j0 = Some(j);
            report.beam = Some(BeamInterval::new(&fam, x.level, x.side, lo, hi)?);
            break;
        }
        point = match dev_step(&fam, x)? {
            DevStep::Moved { point, .. } => Some(point),
            DevStep::VertexHit { .. } => None,
        };
    }
    if report.mu_clipped {
        warnings.push(format!("beam width {mu} exceeds the side; arc clipped"));
    }
    let (Some(beam), Some(j0)) = (report.beam, report.j0) else {
        warnings.push(format!("parallel beam of width {mu} does not fit within {n} reflections"));
        return Ok(report);
    };

    let search = find_periodic_in_beam(&fam, &beam, cfg.beam_max_steps)?;
    let cert = match &search {
        BeamSearch::Found { certificate, steps } => {
            report.within_level = Some(*steps <= n.saturating_sub(j0));
            Some(certificate.clone())
        }
        _ => None,
    };
    report.search = Some(search);
    let Some(cert) = cert else {
        warnings.push("no periodic orbit in the beam".into());
        return Ok(report);
    };

    let folded = certificate_to_billiard_orbit(&fam, &cert)?;
    let orbit = PeriodicOrbit::trace(
        &table,
        folded.start.rotated(theta_mid),
        folded.start_side,
        folded.direction.rotated(theta_mid),
        folded.period,
    )?;
    report.orbit = Some(orbit.clone());

    // Drag towards the apex first, then away from it.
    let step = cfg.drag_step.unwrap_or(1e-3 * table.diameter());
    let toward = (table.vertex(0) - orbit.start).dot(orbit.direction.perp()).signum();
    for sign in [toward, -toward] {
        let s = if sign == 0.0 { step } else { sign * step.abs() };
        let outcome = drag_orbit(&table, &orbit, s, cfg.max_drags)?;
        let apex = match &outcome {
            DragOutcome::VertexEncounter { diagonal, .. } => apex_offset(&table, diagonal),
            DragOutcome::Completed { .. } => None,
        };
        let inside = apex.is_some_and(|t| t > interval.left && t < interval.right);
        report.recovered |= inside;
        report.drags.push(DragAttempt { step: s, outcome, apex_offset: apex, inside_interval: inside });
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::{Setting, TableKind};

    #[test]
    fn gamma_above_critical_is_rejected() {
        let cfg = ExperimentConfig { gamma: 0.2, ..Default::default() };
        let err = run_pipeline(&cfg, &mut Vec::new()).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn ray_correspondence_and_report() {
        let cfg = ExperimentConfig {
            table: TableKind::Rhombus,
            angle: Setting::Value(1.1),
            n_max: 10,
            ..Default::default()
        };
        let mut w = Vec::new();
        let r = run_pipeline(&cfg, &mut w).unwrap();
        assert!(r.interval.left < r.interval.right);
        assert!(r.mu > 0.0);
        if let Some(o) = &r.orbit {
            assert!(o.is_closed(1e-9));
        }
    }

    #[test]
    fn development_follows_the_billiard_ray() {
        let r = Rhombus::with_angle(crate::Angle::new(1.3).unwrap());
        let turn = 0.37;
        let turned = Rhombus::new(
            r.half_diagonal_h,
            r.half_diagonal_v,
            PlanarIsometry::new(-turn, Point2::ORIGIN, Orientation::Preserving),
        )
        .unwrap();
        let fam = RotatedFamily::new(turned, VertexPair::Horizontal);
        let t = turned.table();
        let start = t.vertex(0) * 0.6 + t.vertex(2) * 0.4 + (t.vertex(1) - t.vertex(3)) * 0.05;
        let trace = match trace_orbit(&t, start, Point2::new(1.0, 0.0), 12).unwrap() {
            TraceOutcome::Completed(tr) => tr,
            TraceOutcome::VertexHit { .. } => panic!("generic ray"),
        };
        let j = trace.itinerary.0[0];
        let mut x = DevPoint {
            level: crate::devmap::level_delta(j),
            side: 3 - j,
            s: fam.side_length() - trace.hit_points[0].dist(t.side(j).0),
        };
        // Every other level is a mirror image, so side labels alternate.
        for (k, &next_side) in trace.itinerary.0.iter().enumerate().skip(1) {
            match dev_step(&fam, x).unwrap() {
                DevStep::Moved { point, .. } => {
                    let exit = 3 - point.side;
                    assert_eq!(next_side, if k % 2 == 0 { exit } else { 3 - exit });
                    x = point;
                }
                DevStep::VertexHit { .. } => panic!("generic ray"),
            }
        }
    }
}
