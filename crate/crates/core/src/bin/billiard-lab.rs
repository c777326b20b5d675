//! Command-line front end: one subcommand per experiment.

use billiard_complexity::experiment::{execute, Command, ExperimentConfig, ExperimentError, Setting, TableKind};
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "billiard-lab", version, about = "Billiard complexity experiments")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Count generalized diagonals by length (complexity.csv).
    Complexity(Overrides),
    /// Fit the growth exponent of the complexity (exponent.json).
    Exponent(Overrides),
    /// Indexed partition of one vertex angle (partition.csv, diagonals.csv).
    Partition(Overrides),
    /// Search the partition for a good interval (good_interval.json).
    GoodInterval(Overrides),
    /// Hitting times of a circle rotation (hitting.csv, continued_fraction.json).
    Hitting(Overrides),
    /// Periodic orbit from a beam of the development map (dev_orbit.json).
    DevOrbit(Overrides),
    /// Good interval, beam, periodic orbit and drag in one run (pipeline.json).
    Pipeline(Overrides),
}

#[derive(Clone, Copy, ValueEnum)]
enum TableArg {
    Triangle,
    Rhombus,
}

#[derive(Args)]
struct Overrides {
    /// TOML configuration; flags below override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    table: Option<TableArg>,
    /// Radians, or "seeded-random".
    #[arg(long)]
    angle: Option<String>,
    #[arg(long)]
    n_max: Option<usize>,
    #[arg(long)]
    fit_from: Option<usize>,
    #[arg(long)]
    node_budget: Option<usize>,
    #[arg(long)]
    vertex: Option<usize>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    c: Option<f64>,
    /// Rotation number, or "seeded-random".
    #[arg(long)]
    alpha: Option<String>,
    /// Comma-separated hitting targets.
    #[arg(long, value_delimiter = ',')]
    mu: Option<Vec<f64>>,
    #[arg(long)]
    hitting_cap: Option<u64>,
    #[arg(long)]
    beam_mu: Option<f64>,
    #[arg(long)]
    beam_max_steps: Option<usize>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    drag_step: Option<f64>,
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, short)]
    output_dir: Option<PathBuf>,
}

impl Overrides {
    fn resolve(self) -> Result<ExperimentConfig, ExperimentError> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::from_toml(&std::fs::read_to_string(path)?)?,
            None => ExperimentConfig::default(),
        };
        macro_rules! set {
            ($($field:ident),*) => { $( if let Some(v) = self.$field { cfg.$field = v; } )* };
        }
        set!(n_max, fit_from, node_budget, vertex, gamma, c, hitting_cap, beam_mu, beam_max_steps, epsilon, output_dir);
        if let Some(s) = self.seed {
            cfg.seed = Some(s);
        }
        if let Some(t) = self.table {
            cfg.table = match t {
                TableArg::Triangle => TableKind::Triangle,
                TableArg::Rhombus => TableKind::Rhombus,
            };
        }
        if let Some(a) = &self.angle {
            cfg.angle = Setting::parse(a)?;
        }
        if let Some(a) = &self.alpha {
            cfg.alpha = Setting::parse(a)?;
        }
        if let Some(m) = self.mu {
            cfg.mu_grid = m;
        }
        if self.drag_step.is_some() {
            cfg.drag_step = self.drag_step;
        }
        if self.input.is_some() {
            cfg.input = self.input;
        }
        Ok(cfg)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, overrides) = match cli.command {
        Cmd::Complexity(o) => (Command::Complexity, o),
        Cmd::Exponent(o) => (Command::Exponent, o),
        Cmd::Partition(o) => (Command::Partition, o),
        Cmd::GoodInterval(o) => (Command::GoodInterval, o),
        Cmd::Hitting(o) => (Command::Hitting, o),
        Cmd::DevOrbit(o) => (Command::DevOrbit, o),
        Cmd::Pipeline(o) => (Command::Pipeline, o),
    };
    let result = overrides.resolve().and_then(|cfg| execute(command, &cfg));
    match result {
        Ok(manifest) => {
            for w in &manifest.warnings {
                eprintln!("warning: {w}");
            }
            for f in &manifest.outputs {
                println!("{} {}", f.sha256, f.path);
            }
            if manifest.budget_exceeded {
                ExitCode::from(3)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
