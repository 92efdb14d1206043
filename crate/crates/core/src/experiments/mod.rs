//! Configuration-driven experiment harness. Every experiment is a function
//! of its configuration and seed and writes CSV/JSON files plus a `run.json`
//! metadata record into its output directory.

pub mod config;
pub mod demo;
pub mod io;
pub mod phase;
mod runner;
pub mod sweep;

use std::path::PathBuf;

use serde::Serialize;

use crate::error::{Error, Result};

pub use config::{ExperimentConfig, FamilySource};
pub use runner::run_with_config;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    PhiProfile,
    Localize,
    NoiseSweep,
    GammaError,
    PhaseTransition,
    Demo2d,
    McAmplitude,
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::PhiProfile => "phi_profile",
            Experiment::Localize => "localize",
            Experiment::NoiseSweep => "noise_sweep",
            Experiment::GammaError => "gamma_error",
            Experiment::PhaseTransition => "phase_transition",
            Experiment::Demo2d => "demo2d",
            Experiment::McAmplitude => "mc_amplitude",
        }
    }

    pub fn all() -> [Experiment; 7] {
        [
            Experiment::PhiProfile,
            Experiment::Localize,
            Experiment::NoiseSweep,
            Experiment::GammaError,
            Experiment::PhaseTransition,
            Experiment::Demo2d,
            Experiment::McAmplitude,
        ]
    }

    /// Accepts the snake-case name or the dashed subcommand spelling.
    pub fn from_name(name: &str) -> Option<Self> {
        let n = name.replace('-', "_");
        let n = if n == "demo_2d" { "demo2d".to_string() } else { n };
        Self::all().into_iter().find(|e| e.name() == n)
    }
}

/// Command-line overrides.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub config: Option<PathBuf>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    /// Restore the full trial counts (100 instead of 20).
    pub paper_scale: bool,
}

#[derive(Clone, Debug)]
pub struct RunSummary {
    pub experiment: Experiment,
    pub out_dir: PathBuf,
    /// Files written, relative to `out_dir`.
    pub files: Vec<String>,
    /// Short human-readable result lines.
    pub lines: Vec<String>,
}

/// Load the configuration (if any) and run.
pub fn run(experiment: Experiment, opts: &RunOptions) -> Result<RunSummary> {
    let cfg = match &opts.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    run_with_config(experiment, cfg, opts)
}

/// Process exit code for an error: 2 for configuration and input errors,
/// 3 for numerical and i/o failures.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::InvalidInput(_) => 2,
        Error::Numerical(_) | Error::RankDeficient { .. } | Error::Io(_) => 3,
    }
}
