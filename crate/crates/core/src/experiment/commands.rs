use super::config::{ExperimentConfig, Stream};
use super::pipeline::run_pipeline;
use super::ExperimentError;
use crate::devmap::{
    beam_length_bound, certificate_to_billiard_orbit, default_beam_constant, drag_orbit, find_periodic_in_beam,
    BeamInterval, BeamSearch, RotatedFamily, VertexPair,
};
use crate::partition::{
    build_partition, critical_gamma, find_good_interval, fit_growth_exponent, GrowthFit, IndexedPartition,
};
use crate::rotation::{cf_expand, denominator_growth_rates, write_hitting_csv, HittingResult};
use crate::unfolding::{
    propagate_beams, write_diagonals_csv, BeamEnumeration, ComplexityCensus, Counting, EnumerationOptions,
    UnfoldError,
};
use rand::Rng;
use serde::Serialize;
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Complexity,
    Exponent,
    Partition,
    GoodInterval,
    Hitting,
    DevOrbit,
    Pipeline,
}

/// Files produced by a command, in emission order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CommandOutput {
    pub files: Vec<(String, Vec<u8>)>,
    pub warnings: Vec<String>,
    pub resolved: BTreeMap<String, f64>,
    pub budget_exceeded: bool,
}

impl CommandOutput {
    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), ExperimentError> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.files.push((name.to_string(), bytes));
        Ok(())
    }

    pub fn file(&self, name: &str) -> Option<&[u8]> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, b)| b.as_slice())
    }
}

impl Command {
    pub const ALL: [Command; 7] = [
        Command::Complexity,
        Command::Exponent,
        Command::Partition,
        Command::GoodInterval,
        Command::Hitting,
        Command::DevOrbit,
        Command::Pipeline,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Complexity => "complexity",
            Command::Exponent => "exponent",
            Command::Partition => "partition",
            Command::GoodInterval => "good-interval",
            Command::Hitting => "hitting",
            Command::DevOrbit => "dev-orbit",
            Command::Pipeline => "pipeline",
        }
    }

    pub fn run(self, cfg: &ExperimentConfig) -> Result<CommandOutput, ExperimentError> {
        cfg.validate()?;
        let mut out = CommandOutput::default();
        match self {
            Command::Complexity => complexity(cfg, &mut out)?,
            Command::Exponent => exponent(cfg, &mut out)?,
            Command::Partition => partition(cfg, &mut out)?,
            Command::GoodInterval => good_interval(cfg, &mut out)?,
            Command::Hitting => hitting(cfg, &mut out)?,
            Command::DevOrbit => dev_orbit(cfg, &mut out)?,
            Command::Pipeline => {
                let report = run_pipeline(cfg, &mut out.warnings)?;
                out.resolved.insert("angle".into(), report.angle);
                out.json("pipeline.json", &report)?;
            }
        }
        Ok(out)
    }
}

/// Per-vertex enumerations; on budget exhaustion the partial ones are kept
/// and the usable depth is reduced.
fn enumerate_all(
    cfg: &ExperimentConfig,
    table: &crate::Table,
    out: &mut CommandOutput,
) -> Result<(Vec<BeamEnumeration>, usize), ExperimentError> {
    let opts = EnumerationOptions { node_budget: cfg.node_budget };
    let mut depth = cfg.n_max;
    let mut all = Vec::new();
    for v in 0..table.num_vertices() {
        match propagate_beams(table, v, cfg.n_max, opts) {
            Ok(e) => all.push(e),
            Err(UnfoldError::BudgetExceeded { budget, depth: d, live, partial }) => {
                out.budget_exceeded = true;
                out.warnings.push(format!(
                    "node budget {budget} exceeded at vertex {v}: {live} live beams after depth {d}; rows limited to n <= {d}"
                ));
                depth = depth.min(d);
                all.push(*partial);
            }
            Err(e) => return Err(e.into()),
        }
    }
    Ok((all, depth))
}

fn complexity_rows(cfg: &ExperimentConfig, out: &mut CommandOutput) -> Result<Vec<(usize, Vec<usize>, usize)>, ExperimentError> {
    let table = cfg.build_table()?;
    out.resolved.insert("angle".into(), cfg.resolved_angle());
    let (all, depth) = enumerate_all(cfg, &table, out)?;
    let census = ComplexityCensus::from_enumerations(&table, all);
    if census.unmatched > 0 {
        out.warnings.push(format!("{} diagonals without a located time reversal", census.unmatched));
    }
    Ok((0..=depth)
        .map(|n| {
            let q = (0..table.num_vertices()).map(|v| census.q(v, n)).collect();
            (n, q, census.p(n, Counting::Unoriented))
        })
        .collect())
}

fn complexity(cfg: &ExperimentConfig, out: &mut CommandOutput) -> Result<(), ExperimentError> {
    let rows = complexity_rows(cfg, out)?;
    let vertices = rows.first().map_or(0, |r| r.1.len());
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["n".to_string()];
    header.extend((0..vertices).map(|v| format!("q_v{v}")));
    header.push("p_n".into());
    w.write_record(&header)?;
    for (n, q, p) in rows {
        let mut rec = vec![n.to_string()];
        rec.extend(q.iter().map(|x| x.to_string()));
        rec.push(p.to_string());
        w.write_record(&rec)?;
    }
    out.files.push(("complexity.csv".into(), w.into_inner().map_err(|e| e.into_error())?));
    Ok(())
}

/// `(n, P_n)` pairs from a complexity CSV (first and last columns).
pub fn read_complexity_csv(bytes: &[u8]) -> Result<Vec<(usize, f64)>, ExperimentError> {
    let mut r = csv::Reader::from_reader(bytes);
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let bad = || ExperimentError::Precondition(format!("malformed complexity row {rec:?}"));
        let n = rec.get(0).and_then(|s| s.parse().ok()).ok_or_else(bad)?;
        let p = rec.get(rec.len() - 1).and_then(|s| s.parse().ok()).ok_or_else(bad)?;
        rows.push((n, p));
    }
    Ok(rows)
}

#[derive(Debug, Serialize)]
struct ExponentReport {
    fitted_exponent: f64,
    intercept: f64,
    r_squared: Option<f64>,
    degenerate: bool,
    points: usize,
    n_from: usize,
    n_to: usize,
    critical_gamma: f64,
    target_exponent: f64,
    margin: f64,
    /// `α/π = p/q` for the table's angle, when rational with `q ≤ 1000`.
    rational_angle: Option<(u128, u128)>,
    /// Rational tables have quadratic growth, so the fit says nothing about
    /// typical angles.
    quadratic_growth_flag: bool,
}

fn exponent(cfg: &ExperimentConfig, out: &mut CommandOutput) -> Result<(), ExperimentError> {
    let (series, rational) = match &cfg.input {
        Some(path) => (read_complexity_csv(&std::fs::read(path)?)?, None),
        None => {
            let rows = complexity_rows(cfg, out)?;
            let rat = rational_fraction(cfg.resolved_angle());
            (rows.into_iter().map(|(n, _, p)| (n, p as f64)).collect(), rat)
        }
    };
    let used: Vec<(usize, f64)> = series.into_iter().filter(|&(n, _)| n >= cfg.fit_from.max(1)).collect();
    let fit: GrowthFit = fit_growth_exponent(used.iter().copied())?;
    let gc = critical_gamma();
    let target = 1.0 + gc;
    let report = ExponentReport {
        fitted_exponent: fit.exponent,
        intercept: fit.intercept,
        r_squared: fit.r_squared,
        degenerate: fit.is_degenerate(),
        points: fit.points,
        n_from: used.first().map_or(0, |p| p.0),
        n_to: used.last().map_or(0, |p| p.0),
        critical_gamma: gc,
        target_exponent: target,
        margin: fit.exponent - target,
        rational_angle: rational,
        quadratic_growth_flag: rational.is_some(),
    };
    out.json("exponent.json", &report)
}

fn rational_fraction(angle: f64) -> Option<(u128, u128)> {
    let x = angle / std::f64::consts::PI;
    let cf = cf_expand(x, 40).ok()?;
    (0..cf.q.len())
        .take_while(|&i| cf.q[i] <= 1000)
        .find(|&i| (x - cf.p[i] as f64 / cf.q[i] as f64).abs() < 1e-12)
        .map(|i| (cf.p[i], cf.q[i]))
}

fn vertex_partition(cfg: &ExperimentConfig, out: &mut CommandOutput) -> Result<(IndexedPartition, BeamEnumeration), ExperimentError> {
    let table = cfg.build_table()?;
    out.resolved.insert("angle".into(), cfg.resolved_angle());
    if cfg.vertex >= table.num_vertices() {
        return Err(ExperimentError::Precondition(format!("vertex {} does not exist", cfg.vertex)));
    }
    let opts = EnumerationOptions { node_budget: cfg.node_budget };
    let (en, level) = match propagate_beams(&table, cfg.vertex, cfg.n_max, opts) {
        Ok(e) => (e, cfg.n_max),
        Err(UnfoldError::BudgetExceeded { depth, partial, .. }) => {
            out.budget_exceeded = true;
            out.warnings.push(format!("node budget exceeded; partition truncated to level {depth}"));
            (*partial, depth)
        }
        Err(e) => return Err(e.into()),
    };
    let diags: Vec<_> = en.diagonals.iter().filter(|d| d.reflections <= level).cloned().collect();
    let angle = crate::Angle::in_range(table.vertex_angle(cfg.vertex), 0.0, std::f64::consts::PI)?;
    Ok((build_partition(&diags, angle, level)?, en))
}

fn partition(cfg: &ExperimentConfig, out: &mut CommandOutput) -> Result<(), ExperimentError> {
    let (p, en) = vertex_partition(cfg, out)?;
    let mut bytes = Vec::new();
    p.write_csv(&mut bytes)?;
    out.files.push(("partition.csv".into(), bytes));
    let mut diag = Vec::new();
    write_diagonals_csv(&mut diag, en.diagonals.iter())?;
    out.files.push(("diagonals.csv".into(), diag));
    Ok(())
}

#[derive(Debug, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
enum GoodIntervalReport {
    Found {
        #[serde(flatten)]
        search: crate::partition::GoodIntervalSearch,
        conclusions_hold: bool,
    },
    NotFound {
        n: usize,
        cuts: usize,
        diameter: f64,
        #[serde(flatten)]
        reason: crate::partition::NotFound,
    },
}

fn good_interval(cfg: &ExperimentConfig, out: &mut CommandOutput) -> Result<(), ExperimentError> {
    let p = match &cfg.input {
        Some(path) => IndexedPartition::read_csv(std::io::BufReader::new(std::fs::File::open(path)?))?,
        None => vertex_partition(cfg, out)?.0,
    };
    let report = match find_good_interval(&p, cfg.gamma, cfg.c)? {
        Ok(search) => {
            let ok = search.conclusions_hold();
            GoodIntervalReport::Found { search, conclusions_hold: ok }
        }
        Err(reason) => {
            out.warnings.push(format!("good interval not found: {reason:?}"));
            GoodIntervalReport::NotFound {
                n: p.level(),
                cuts: p.len(),
                diameter: crate::partition::partition_diameter(&p),
                reason,
            }
        }
    };
    out.json("good_interval.json", &report)
}

#[derive(Debug, Serialize)]
struct ExpansionReport {
    alpha: f64,
    partial_quotients: Vec<u128>,
    denominators: Vec<u128>,
    truncated: bool,
    denominator_growth: Vec<(usize, f64)>,
    /// `L_exact · μ^{2+ε}` per grid value.
    scaled_hitting: Vec<(f64, Option<f64>)>,
}

fn hitting(cfg: &ExperimentConfig, out: &mut CommandOutput) -> Result<(), ExperimentError> {
    let alpha = cfg.resolved_alpha();
    out.resolved.insert("alpha".into(), alpha);
    let cf = cf_expand(alpha, cfg.cf_depth)?;
    if cf.truncated {
        out.warnings.push(format!("continued fraction truncated at depth {}", cf.depth()));
    }
    let mut rows = Vec::new();
    for &mu in &cfg.mu_grid {
        let r = HittingResult::compute(&cf, mu, cfg.hitting_cap)?;
        if r.exact.is_none() {
            out.warnings.push(format!("hitting time unresolved for mu = {mu} (cap {})", cfg.hitting_cap));
        }
        rows.push(r);
    }
    let mut bytes = Vec::new();
    write_hitting_csv(&rows, &mut bytes)?;
    out.files.push(("hitting.csv".into(), bytes));
    let report = ExpansionReport {
        alpha,
        partial_quotients: cf.partial_quotients.clone(),
        denominators: cf.q.clone(),
        truncated: cf.truncated,
        denominator_growth: denominator_growth_rates(&cf),
        scaled_hitting: rows.iter().map(|r| (r.mu, r.scaled(cfg.epsilon))).collect(),
    };
    out.json("continued_fraction.json", &report)
}

#[derive(Debug, Serialize)]
struct DevOrbitReport {
    rhombus_angle: f64,
    rational_angle: Option<(u128, u128)>,
    interval: BeamInterval,
    search: BeamSearch,
    beam_length_bound: f64,
    orbit: Option<crate::devmap::PeriodicOrbit>,
    drag: Option<crate::devmap::DragOutcome>,
}

fn dev_orbit(cfg: &ExperimentConfig, out: &mut CommandOutput) -> Result<(), ExperimentError> {
    let rhombus = cfg.build_rhombus()?;
    out.resolved.insert("angle".into(), cfg.resolved_angle());
    let fam = RotatedFamily::new(rhombus, VertexPair::Horizontal);
    if let Some((p, q)) = fam.rational_flag() {
        out.warnings.push(format!("rhombus angle is {p}/{q}·π; levels repeat"));
    }
    let mut rng = cfg.rng(Stream::Beam);
    let sides = fam.left_facing(0);
    let side = sides[rng.gen_range(0..sides.len())];
    let s = rng.gen_range(0.1..0.9) * fam.side_length();
    out.resolved.insert("beam_side".into(), side as f64);
    out.resolved.insert("beam_arc".into(), s);
    let interval = BeamInterval::around(&fam, 0, side, s, cfg.beam_mu)?;
    let search = find_periodic_in_beam(&fam, &interval, cfg.beam_max_steps)?;
    let c = cfg.beam_constant.unwrap_or_else(|| default_beam_constant(&fam));
    let bound = beam_length_bound(c, cfg.beam_mu, cfg.epsilon);
    let (orbit, drag) = match &search {
        BeamSearch::Found { certificate, .. } => {
            let orbit = certificate_to_billiard_orbit(&fam, certificate)?;
            let table = fam.base().table_with(cfg.tolerances());
            let step = cfg.drag_step.unwrap_or(1e-3 * table.diameter());
            let drag = drag_orbit(&table, &orbit, step, cfg.max_drags)?;
            (Some(orbit), Some(drag))
        }
        BeamSearch::NotFound { steps } => {
            out.warnings.push(format!("no periodic orbit within {steps} steps"));
            (None, None)
        }
        BeamSearch::Split(e) => {
            out.warnings.push(format!("beam split at step {} on vertex {}", e.at_step, e.vertex));
            (None, None)
        }
    };
    let report = DevOrbitReport {
        rhombus_angle: fam.alpha(),
        rational_angle: fam.rational_flag(),
        interval,
        search,
        beam_length_bound: bound,
        orbit,
        drag,
    };
    out.json("dev_orbit.json", &report)
}
