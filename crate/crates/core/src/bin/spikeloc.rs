use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use spikeloc::experiments::{exit_code, run, Experiment, RunOptions};

#[derive(Parser)]
#[command(name = "spikeloc", version, about = "Off-the-grid spike localization and operator identification experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment configuration (JSON).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Base seed; overrides the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; overrides the configuration.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Use 100 trials per setting instead of 20.
    #[arg(long)]
    paper_scale: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Decorrelation profile, spectral bounds and profile model.
    PhiProfile(Common),
    /// Localize spikes in a measurement file or a synthesized one.
    Localize(Common),
    /// Single-spike localization error against the noise level.
    NoiseSweep(Common),
    /// Known-weights operator error against the noise level.
    GammaError(Common),
    /// Success rates of the bilinear solvers over (K, N).
    PhaseTransition(Common),
    /// Two-dimensional bead-field detection and operator recovery.
    #[command(name = "demo-2d")]
    Demo2d(Common),
    /// Monte-Carlo amplitudes of the noise terms.
    McAmplitude(Common),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (experiment, common) = match cli.command {
        Command::PhiProfile(c) => (Experiment::PhiProfile, c),
        Command::Localize(c) => (Experiment::Localize, c),
        Command::NoiseSweep(c) => (Experiment::NoiseSweep, c),
        Command::GammaError(c) => (Experiment::GammaError, c),
        Command::PhaseTransition(c) => (Experiment::PhaseTransition, c),
        Command::Demo2d(c) => (Experiment::Demo2d, c),
        Command::McAmplitude(c) => (Experiment::McAmplitude, c),
    };
    let opts = RunOptions { config: common.config, seed: common.seed, out: common.out, paper_scale: common.paper_scale };
    match run(experiment, &opts) {
        Ok(summary) => {
            for line in &summary.lines {
                println!("{line}");
            }
            println!("wrote {} files to {}", summary.files.len(), summary.out_dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
