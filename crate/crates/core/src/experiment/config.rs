use crate::geometry::{Rhombus, RightTriangle, Table, Tolerances};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;
use std::path::PathBuf;

use super::ExperimentError;

/// A number, or a value drawn from the run's seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Setting {
    Value(f64),
    Drawn(SeededRandom),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SeededRandom {
    #[serde(rename = "seeded-random")]
    SeededRandom,
}

impl Setting {
    pub const SEEDED: Setting = Setting::Drawn(SeededRandom::SeededRandom);

    pub fn is_seeded(&self) -> bool {
        matches!(self, Setting::Drawn(_))
    }

    pub fn parse(s: &str) -> Result<Self, ExperimentError> {
        if s == "seeded-random" {
            Ok(Setting::SEEDED)
        } else {
            s.parse::<f64>()
                .map(Setting::Value)
                .map_err(|_| ExperimentError::Precondition(format!("expected a number or \"seeded-random\", got {s:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TableKind {
    /// Right triangle with the given acute angle at the horizontal leg.
    Triangle,
    /// Rhombus with the given angle at vertices 0 and 2.
    Rhombus,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToleranceConfig {
    pub vertex_rel: f64,
    pub line_rel: f64,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        let t = Tolerances::default();
        ToleranceConfig { vertex_rel: t.vertex_rel, line_rel: t.line_rel }
    }
}

/// Everything a command needs; read from TOML, then overridden by flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: Option<u64>,
    pub table: TableKind,
    /// Triangle acute angle or rhombus angle, in radians.
    pub angle: Setting,
    pub n_max: usize,
    /// Smallest `n` used by the growth fit.
    pub fit_from: usize,
    pub node_budget: usize,
    /// Vertex whose diagonals form the partition.
    pub vertex: usize,
    pub gamma: f64,
    pub c: f64,
    /// Rotation number in `(0, 1)` for the hitting command.
    pub alpha: Setting,
    pub mu_grid: Vec<f64>,
    pub hitting_cap: u64,
    pub cf_depth: usize,
    /// Width of the parallel beam for dev-orbit.
    pub beam_mu: f64,
    pub beam_max_steps: usize,
    /// Constant in the beam-length bound; `4·λ(X_0)` when absent.
    pub beam_constant: Option<f64>,
    pub epsilon: f64,
    /// Transverse drag step; `1e-3 ×` table diameter when absent.
    pub drag_step: Option<f64>,
    pub max_drags: usize,
    pub tolerances: ToleranceConfig,
    pub output_dir: PathBuf,
    /// Existing data file (complexity CSV for exponent, partition CSV for good-interval).
    pub input: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: None,
            table: TableKind::Triangle,
            angle: Setting::Value(std::f64::consts::FRAC_PI_4),
            n_max: 12,
            fit_from: 1,
            node_budget: 10_000_000,
            vertex: 0,
            gamma: 0.1,
            c: 2.0,
            alpha: Setting::Value((5f64.sqrt() - 1.0) / 2.0),
            mu_grid: (3..=10).map(|k| 0.5f64.powi(k)).collect(),
            hitting_cap: 10_000_000,
            cf_depth: 40,
            beam_mu: 1e-2,
            beam_max_steps: 100_000,
            beam_constant: None,
            epsilon: 0.1,
            drag_step: None,
            max_drags: 1_000_000,
            tolerances: ToleranceConfig::default(),
            output_dir: PathBuf::from("out"),
            input: None,
        }
    }
}

/// Independent random streams, one per drawn quantity.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Stream {
    Angle = 1,
    Alpha = 2,
    Beam = 3,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ExperimentError> {
        toml::from_str(text).map_err(|e| ExperimentError::Precondition(format!("config: {e}")))
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: String| Err(ExperimentError::Precondition(m));
        if (self.angle.is_seeded() || self.alpha.is_seeded()) && self.seed.is_none() {
            return bad("a seed is required when any parameter is \"seeded-random\"".into());
        }
        let t = &self.tolerances;
        if !(t.vertex_rel > 0.0 && t.line_rel > 0.0) {
            return bad("tolerances must be positive".into());
        }
        if let Setting::Value(a) = self.angle {
            let hi = match self.table {
                TableKind::Triangle => FRAC_PI_2,
                TableKind::Rhombus => std::f64::consts::PI,
            };
            if !(a > 0.0 && a < hi) {
                return bad(format!("angle {a} out of range (0, {hi})"));
            }
        }
        if let Setting::Value(a) = self.alpha {
            if !(a > 0.0 && a < 1.0) {
                return bad(format!("alpha {a} must lie in (0, 1)"));
            }
        }
        if !(self.gamma > 0.0 && self.c > 0.0) {
            return bad("gamma and c must be positive".into());
        }
        if let Some(mu) = self.mu_grid.iter().find(|&&m| !(m > 0.0 && m < 0.5)) {
            return bad(format!("mu {mu} must lie in (0, 0.5)"));
        }
        if !(self.beam_mu > 0.0) || !(self.epsilon > 0.0) {
            return bad("beam_mu and epsilon must be positive".into());
        }
        if self.node_budget == 0 {
            return bad("node_budget must be positive".into());
        }
        Ok(())
    }

    pub(crate) fn rng(&self, stream: Stream) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed.unwrap_or(0));
        rng.set_stream(stream as u64);
        rng
    }

    pub fn tolerances(&self) -> Tolerances {
        Tolerances { vertex_rel: self.tolerances.vertex_rel, line_rel: self.tolerances.line_rel }
    }

    /// Triangle acute angle or rhombus angle after drawing seeded values.
    /// A typical triangle angle is uniform on `(0, π/2)`; a typical rhombus
    /// is the one unfolded from a typical triangle.
    pub fn resolved_angle(&self) -> f64 {
        match self.angle {
            Setting::Value(a) => a,
            Setting::Drawn(_) => {
                let a = self.rng(Stream::Angle).gen_range(0.0..FRAC_PI_2);
                match self.table {
                    TableKind::Triangle => a,
                    TableKind::Rhombus => 2.0 * a,
                }
            }
        }
    }

    pub fn resolved_alpha(&self) -> f64 {
        match self.alpha {
            Setting::Value(a) => a,
            Setting::Drawn(_) => loop {
                let a: f64 = self.rng(Stream::Alpha).gen();
                if a > 0.0 {
                    break a;
                }
            },
        }
    }

    pub fn build_table(&self) -> Result<Table, ExperimentError> {
        let a = self.resolved_angle();
        Ok(match self.table {
            TableKind::Triangle => RightTriangle::new(a, 1.0)?.table_with(self.tolerances()),
            TableKind::Rhombus => self.build_rhombus()?.table_with(self.tolerances()),
        })
    }

    /// The rhombus of the configured table (unfolded from the triangle).
    pub fn build_rhombus(&self) -> Result<Rhombus, ExperimentError> {
        let a = self.resolved_angle();
        Ok(match self.table {
            TableKind::Triangle => crate::geometry::triangle_to_rhombus(&RightTriangle::new(a, 1.0)?),
            TableKind::Rhombus => Rhombus::with_angle(crate::Angle::new(a)?),
        })
    }
}
