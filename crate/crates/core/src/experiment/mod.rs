//! Reproducible runs: configuration, commands and manifests.
//!
//! Each command is a pure function of its configuration that returns the
//! bytes of every file it emits; [`write_run`] stores them together with a
//! manifest of content hashes.

mod commands;
pub mod config;
pub mod pipeline;

pub use commands::{Command, CommandOutput};
pub use config::{ExperimentConfig, Setting, TableKind};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error(transparent)]
    Geometry(#[from] crate::geometry::GeometryError),
    #[error(transparent)]
    Unfold(#[from] crate::unfolding::UnfoldError),
    #[error(transparent)]
    Partition(#[from] crate::partition::PartitionError),
    #[error(transparent)]
    Rotation(#[from] crate::rotation::RotationError),
    #[error(transparent)]
    Dev(#[from] crate::devmap::DevError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl ExperimentError {
    /// Process exit code for this failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            ExperimentError::Precondition(_)
            | ExperimentError::Geometry(_)
            | ExperimentError::Partition(crate::partition::PartitionError::InsufficientData)
            | ExperimentError::Partition(crate::partition::PartitionError::BadParameter { .. })
            | ExperimentError::Rotation(_) => 2,
            ExperimentError::Unfold(crate::unfolding::UnfoldError::BudgetExceeded { .. }) => 3,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputFile {
    pub path: String,
    pub sha256: String,
    pub bytes: usize,
}

/// Record of one command run. Everything except `wall_clock_seconds` is a
/// function of the configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub library_version: String,
    pub config: ExperimentConfig,
    /// Values drawn from the seed, and other derived inputs.
    pub resolved: BTreeMap<String, f64>,
    pub outputs: Vec<OutputFile>,
    pub warnings: Vec<String>,
    pub budget_exceeded: bool,
    pub wall_clock_seconds: f64,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub const MANIFEST_FILE: &str = "manifest.json";

/// Write every output file into `dir`, then `manifest.json`.
pub fn write_run(
    dir: &Path,
    command: Command,
    config: &ExperimentConfig,
    output: &CommandOutput,
    wall_clock_seconds: f64,
) -> Result<RunManifest, ExperimentError> {
    std::fs::create_dir_all(dir)?;
    let mut outputs = Vec::new();
    for (name, bytes) in &output.files {
        std::fs::write(dir.join(name), bytes)?;
        outputs.push(OutputFile { path: name.clone(), sha256: sha256_hex(bytes), bytes: bytes.len() });
    }
    let manifest = RunManifest {
        command: command.name().to_string(),
        library_version: env!("CARGO_PKG_VERSION").to_string(),
        config: config.clone(),
        resolved: output.resolved.clone(),
        outputs,
        warnings: output.warnings.clone(),
        budget_exceeded: output.budget_exceeded,
        wall_clock_seconds,
    };
    let mut text = serde_json::to_vec_pretty(&manifest)?;
    text.push(b'\n');
    std::fs::write(dir.join(MANIFEST_FILE), text)?;
    Ok(manifest)
}

/// Run a command and store its outputs under the configured directory.
pub fn execute(command: Command, config: &ExperimentConfig) -> Result<RunManifest, ExperimentError> {
    config.validate()?;
    let clock = std::time::Instant::now();
    let output = command.run(config)?;
    let seconds = clock.elapsed().as_secs_f64();
    write_run(&config.output_dir, command, config, &output, seconds)
}
