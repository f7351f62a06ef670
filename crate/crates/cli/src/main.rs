//! `fdamimo`: batch runs of the FDA-MIMO multipath simulator.
//!
//! Exit codes: 0 on success, 2 for configuration errors (including a
//! missing or malformed scenario), 3 for numerical or I/O failures.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "fdamimo",
    version,
    about = "Simulate FDA-MIMO echoes, label multipath cells and suppress them"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate the echo cube and write range profiles and detections.
    Simulate(CommonArgs),
    /// Simulate, detect and label every detected cell as real or multipath.
    Discriminate(CommonArgs),
    /// Run the transmit/receive weighting and frequency-increment search.
    Mitigate(CommonArgs),
    /// Evaluate the mitigation objective over one scenario parameter.
    Sweep(SweepArgs),
}

#[derive(Args, Clone)]
pub struct CommonArgs {
    /// Scenario file, or the name of a bundled scenario (example1, example2).
    #[arg(long)]
    pub scenario: String,
    /// Output directory, created if missing.
    #[arg(long)]
    pub out: PathBuf,
    /// Noise seed; overrides scene.seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Angle grid step of the spatial spectra in degrees.
    #[arg(long)]
    pub grid_deg: Option<f64>,
    /// CFAR false-alarm probability.
    #[arg(long)]
    pub pfa: Option<f64>,
}

#[derive(Args, Clone)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// One of freq_increment_hz, reflection_magnitude, reflector_offset_m.
    #[arg(long, default_value = "freq_increment_hz")]
    pub param: String,
    /// First grid value; defaults to mitigation.sweep_start_hz for Δf.
    #[arg(long)]
    pub start: Option<f64>,
    /// Last grid value; defaults to mitigation.sweep_stop_hz for Δf.
    #[arg(long)]
    pub stop: Option<f64>,
    /// Number of grid points; defaults to mitigation.sweep_steps.
    #[arg(long)]
    pub steps: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate(a) => commands::simulate(a),
        Command::Discriminate(a) => commands::discriminate(a),
        Command::Mitigate(a) => commands::mitigate(a),
        Command::Sweep(a) => commands::sweep(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fdamimo: {e}");
            if e.is_config() {
                ExitCode::from(2)
            } else {
                ExitCode::from(3)
            }
        }
    }
}
