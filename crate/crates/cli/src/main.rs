//! `qreading`: bounds, simulation, calibration, experiments, sweeps and
//! memory read-out from the command line.
//!
//! Exit codes: 0 on success, 2 on usage or validation errors, 1 on runtime
//! errors. Errors go to standard error as `ERROR:<code>:<message>`.

mod commands;
mod config;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qreading_core::montecarlo::{Sampling, Transmitter};
use qreading_core::photon_stats::PairStatistics;
use qreading_core::pipeline::{BoundEnergy, RuleKind};

use crate::config::Config;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Config(String),
    Core(qreading_core::Error),
    Io(std::io::Error),
}

impl CliError {
    fn code(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Config(_) => "config",
            CliError::Core(e) => e.code(),
            CliError::Io(_) => "io",
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => 2,
            CliError::Core(e) if e.is_validation() => 2,
            _ => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Config(m) => f.write_str(m),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "{e}"),
        }
    }
}

impl From<qreading_core::Error> for CliError {
    fn from(e: qreading_core::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

#[derive(Parser, Debug)]
#[command(name = "qreading", version, about = "Photon-counting quantum reading of optical memories")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Classical bound and coherent photon-counting error over an N grid.
    Bounds(BoundsArgs),
    /// Simulate labeled frame sets.
    Simulate(SimulateArgs),
    /// Estimate efficiencies (and noise) from frame files.
    Calibrate(CalibrateArgs),
    /// Error probabilities and gains for one setting.
    Experiment(ExperimentArgs),
    /// Gains over a grid of tau0 and N values, with model curves.
    Sweep(SweepArgs),
    /// Write a bit pattern into simulated cells and read it back.
    Read(ReadArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Default)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// TOML config file or a run manifest (JSON).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Args, Debug, Clone, Default)]
pub struct PairFlags {
    #[arg(long)]
    tau0: Option<f64>,
    #[arg(long)]
    tau1: Option<f64>,
    #[arg(long)]
    eta_s: Option<f64>,
    #[arg(long)]
    eta_i: Option<f64>,
    /// Mean photon number per frame sent to the cell.
    #[arg(long = "photons")]
    mean_signal_photons: Option<f64>,
    /// Straylight mean per region, both arms.
    #[arg(long)]
    straylight: Option<f64>,
    #[arg(long)]
    electronic_variance: Option<f64>,
    #[arg(long)]
    frames: Option<usize>,
    #[arg(long)]
    subsets: Option<usize>,
    #[arg(long, value_enum)]
    transmitter: Option<TransmitterArg>,
    #[arg(long, value_enum)]
    sampling: Option<SamplingArg>,
    #[arg(long, value_enum)]
    rule: Option<RuleArg>,
    #[arg(long, value_enum)]
    bound_energy: Option<BoundEnergyArg>,
    #[arg(long)]
    calibrate_from_data: Option<bool>,
    /// Thermal modes per frame; Poisson pair statistics when absent.
    #[arg(long)]
    modes: Option<u64>,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum TransmitterArg {
    Tmsv,
    Coherent,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum SamplingArg {
    ExactPair,
    Gaussian,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum RuleArg {
    Auto,
    Gaussian,
    ExactPair,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum BoundEnergyArg {
    Detected,
    Incident,
}

impl PairFlags {
    fn apply(&self, c: &mut Config) {
        let p = &mut c.pair;
        p.tau0 = self.tau0.or(p.tau0);
        p.tau1 = self.tau1.or(p.tau1);
        p.eta_s = self.eta_s.or(p.eta_s);
        p.eta_i = self.eta_i.or(p.eta_i);
        p.mean_signal_photons = self.mean_signal_photons.or(p.mean_signal_photons);
        if let Some(s) = self.straylight {
            p.straylight_signal = Some(s);
            p.straylight_idler = Some(s);
        }
        p.electronic_variance = self.electronic_variance.or(p.electronic_variance);
        c.frames_per_set = self.frames.or(c.frames_per_set);
        c.subsets = self.subsets.or(c.subsets);
        if let Some(t) = self.transmitter {
            c.transmitter = Some(match t {
                TransmitterArg::Tmsv => Transmitter::Tmsv,
                TransmitterArg::Coherent => Transmitter::Coherent,
            });
        }
        if let Some(s) = self.sampling {
            c.sampling = Some(match s {
                SamplingArg::ExactPair => Sampling::ExactPair,
                SamplingArg::Gaussian => Sampling::Gaussian,
            });
        }
        if let Some(r) = self.rule {
            c.rule = Some(match r {
                RuleArg::Auto => RuleKind::Auto,
                RuleArg::Gaussian => RuleKind::Gaussian,
                RuleArg::ExactPair => RuleKind::ExactPair,
            });
        }
        if let Some(b) = self.bound_energy {
            c.bound_energy = Some(match b {
                BoundEnergyArg::Detected => BoundEnergy::Detected,
                BoundEnergyArg::Incident => BoundEnergy::Incident,
            });
        }
        c.calibrate_from_data = self.calibrate_from_data.or(c.calibrate_from_data);
        if let Some(modes) = self.modes {
            c.pair_statistics = Some(PairStatistics::MultiThermal { modes });
        }
    }
}

#[derive(Args, Debug)]
pub struct BoundsArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    tau0: Option<f64>,
    #[arg(long)]
    tau1: Option<f64>,
    /// Signal detection efficiency, folded into both transmittances.
    #[arg(long)]
    eta_s: Option<f64>,
    /// `start:end[:step]` (inclusive) or a comma-separated list.
    #[arg(long)]
    n_grid: Option<String>,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    pair: PairFlags,
    /// Which channel to simulate: 0, 1 or both.
    #[arg(long)]
    truth: Option<String>,
    /// Independent arms with the same marginals (no pair correlation).
    #[arg(long)]
    classical: Option<bool>,
    /// Also write this many dark-region and shutter-closed frames.
    #[arg(long)]
    noise_frames: Option<usize>,
    /// Electronic offset added to noise frames.
    #[arg(long)]
    bias: Option<f64>,
}

#[derive(Args, Debug)]
pub struct CalibrateArgs {
    #[command(flatten)]
    common: Common,
    /// Frame file (CSV or JSON lines) with correlated signal/idler counts.
    #[arg(long)]
    frames: Option<String>,
    #[arg(long)]
    dark: Option<String>,
    #[arg(long)]
    shutter: Option<String>,
    #[arg(long)]
    straylight: Option<f64>,
    #[arg(long)]
    electronic_variance: Option<f64>,
}

#[derive(Args, Debug)]
pub struct ExperimentArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    pair: PairFlags,
    /// Labeled tau0 frames to analyse instead of simulating.
    #[arg(long, requires = "frames1")]
    frames0: Option<String>,
    #[arg(long, requires = "frames0")]
    frames1: Option<String>,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    pair: PairFlags,
    /// tau0 values: `start:end:step` or a comma-separated list.
    #[arg(long)]
    tau0_grid: Option<String>,
    /// Mean photon numbers, comma-separated.
    #[arg(long)]
    n_list: Option<String>,
}

#[derive(Args, Debug)]
pub struct ReadArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    pair: PairFlags,
    /// File of 0/1 characters to store.
    #[arg(long)]
    image: Option<String>,
    /// Number of cells of a seeded random image (when no file is given).
    #[arg(long)]
    cells: Option<usize>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("invalid arguments");
            eprintln!("ERROR:usage:{}", first.trim_start_matches("error: "));
            eprint!("{}", e.render());
            return ExitCode::from(2);
        }
    };
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ERROR:{}:{}", e.code(), e);
            ExitCode::from(e.exit_code())
        }
    }
}
