//! `beamrefine`: synthesize channels, refine codebooks, and evaluate them.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use beamrefine_core::{ArrayConfig, Error};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "beamrefine", version, about = "Greedy beam-codebook refinement for rotating phased arrays")]
struct Cli {
    /// Cap on worker threads for data-parallel evaluation.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample orientations and write train/holdout channel CSVs.
    Synth(SynthArgs),
    /// Run greedy refinement on a training CSV.
    Refine(RefineArgs),
    /// Evaluate a codebook on held-out channels.
    Validate(ValidateArgs),
    /// Build the hierarchical baseline and compare it with a refined codebook.
    Hier(HierArgs),
    /// Exhaustive search on a random small-array channel.
    Oracle(OracleArgs),
    /// Re-emit a JSON gap report as CSV or JSON.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Args)]
struct ArrayArgs {
    /// Array size as LxL, e.g. 4x4.
    #[arg(long = "array", default_value = "4x4", value_parser = parse_array_side)]
    side: usize,
    /// Configuration bits per antenna (N).
    #[arg(long, default_value_t = 10)]
    bits: u32,
    /// Bits of N used for amplitude control (K_amp).
    #[arg(long = "amp-bits", default_value_t = 0)]
    amp_bits: u32,
    /// Element spacing in carrier wavelengths.
    #[arg(long = "spacing-wl", default_value_t = 0.5)]
    spacing_wl: f64,
    #[arg(long = "carrier-hz", default_value_t = 25.1e9)]
    carrier_hz: f64,
}

impl ArrayArgs {
    fn config(&self) -> Result<ArrayConfig, Error> {
        ArrayConfig::new(self.side, self.bits, self.amp_bits, self.spacing_wl, self.carrier_hz)
    }
}

fn parse_array_side(s: &str) -> Result<usize, String> {
    let (a, b) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected LxL, got {s:?}"))?;
    let a: usize = a.trim().parse().map_err(|_| format!("bad array size {s:?}"))?;
    let b: usize = b.trim().parse().map_err(|_| format!("bad array size {s:?}"))?;
    if a != b || a == 0 {
        return Err(format!("array must be square and non-empty, got {s:?}"));
    }
    Ok(a)
}

#[derive(Debug, Clone, Args)]
struct SectorArgs {
    /// Lower edge of the orientation sector, degrees.
    #[arg(long = "sector-min-deg", default_value_t = -45.0, allow_negative_numbers = true)]
    min_deg: f64,
    /// Upper edge of the orientation sector, degrees.
    #[arg(long = "sector-max-deg", default_value_t = 45.0, allow_negative_numbers = true)]
    max_deg: f64,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[command(flatten)]
    array: ArrayArgs,
    #[command(flatten)]
    sector: SectorArgs,
    /// Scenario JSON; a seeded default multipath scenario is generated when absent.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Reflected paths in the generated default scenario.
    #[arg(long, default_value_t = beamrefine_core::channel::DEFAULT_REFLECTIONS)]
    reflections: usize,
    /// Training orientations (M).
    #[arg(long = "train", default_value_t = 300)]
    train: usize,
    /// Held-out orientations.
    #[arg(long = "holdout", default_value_t = 140)]
    holdout: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Add per-element noise at the scenario's noise power.
    #[arg(long)]
    noise: bool,
    /// Noise power used with --noise when the scenario does not set one.
    #[arg(long = "noise-db", default_value_t = -30.0, allow_negative_numbers = true)]
    noise_db: f64,
    /// Fraction of holdout samples whose line of sight is blocked (10-30 dB).
    #[arg(long = "obstacle-fraction", default_value_t = 0.0)]
    obstacle_fraction: f64,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct RefineArgs {
    #[command(flatten)]
    array: ArrayArgs,
    /// Training CSV; defaults to OUT/train.csv.
    #[arg(long = "train-file")]
    train_file: Option<PathBuf>,
    #[arg(long = "gamma-db", default_value_t = 3.0)]
    gamma_db: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Drop codewords made redundant by later ones.
    #[arg(long)]
    prune: bool,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    #[command(flatten)]
    array: ArrayArgs,
    /// Codebook JSON; defaults to OUT/codebook.json.
    #[arg(long)]
    codebook: Option<PathBuf>,
    /// Channels to evaluate on; defaults to OUT/holdout.csv.
    #[arg(long = "holdout-file")]
    holdout_file: Option<PathBuf>,
    #[arg(long = "gamma-db", default_value_t = 3.0)]
    gamma_db: f64,
    /// Report signed gaps against rounded MRC instead of clamping at zero.
    #[arg(long = "raw-gaps")]
    raw_gaps: bool,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct HierArgs {
    #[command(flatten)]
    array: ArrayArgs,
    #[command(flatten)]
    sector: SectorArgs,
    #[arg(long, default_value_t = 5)]
    levels: usize,
    /// Refined codebook to compare against; defaults to OUT/codebook.json if present.
    #[arg(long)]
    codebook: Option<PathBuf>,
    #[arg(long = "holdout-file")]
    holdout_file: Option<PathBuf>,
    #[arg(long = "gamma-db", default_value_t = 3.0)]
    gamma_db: f64,
    #[arg(long = "raw-gaps")]
    raw_gaps: bool,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct OracleArgs {
    #[arg(long = "array", default_value = "2x2", value_parser = parse_array_side)]
    side: usize,
    #[arg(long, default_value_t = 2)]
    bits: u32,
    #[arg(long = "amp-bits", default_value_t = 0)]
    amp_bits: u32,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Largest codebook the exhaustive search may enumerate.
    #[arg(long, default_value_t = 1 << 24)]
    budget: u128,
    /// Fixture to compare the result with; mismatch exits with status 3.
    #[arg(long)]
    check: Option<PathBuf>,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// JSON gap report written by `validate` or `hier`.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,
    #[arg(long)]
    output: PathBuf,
    /// Also write the CDF knots as gap_db,fraction CSV.
    #[arg(long)]
    cdf: Option<PathBuf>,
}

/// Process exit status with its message.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

pub const EXIT_USAGE: u8 = 2;
pub const EXIT_DATA: u8 = 3;
pub const EXIT_INFEASIBLE: u8 = 4;

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::InvalidConfig(_) | Error::InvalidArgument(_) => EXIT_USAGE,
            Error::InvalidCodeword(_)
            | Error::Parse { .. }
            | Error::Schema { .. }
            | Error::Io { .. }
            | Error::Json { .. } => EXIT_DATA,
            Error::DegenerateChannel { .. } | Error::BudgetExceeded { .. } => EXIT_INFEASIBLE,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Synth(a) => commands::synth(a),
        Command::Refine(a) => commands::refine(a),
        Command::Validate(a) => commands::validate(a),
        Command::Hier(a) => commands::hier(a),
        Command::Oracle(a) => commands::oracle(a),
        Command::Report(a) => commands::report(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("BEAMREFINE_LOG", "warn")).init();
    let cli = Cli::parse();

    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("could not size thread pool: {e}");
        }
    }

    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
