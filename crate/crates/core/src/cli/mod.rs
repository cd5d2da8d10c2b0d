//! The `nodal-lab` command line: experiment recipes, run directories and
//! plot-ready tables.
//!
//! Exit codes are `0` on success, `1` when a run fails and `2` for invalid
//! configuration (including unknown flags). Configuration is validated before
//! the run directory is created, so a rejected command leaves no files behind.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::Error;

mod commands;
pub mod expr;
pub mod output;

pub use expr::{parse_list, parse_measure, MEASURE_FORMS};

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "nodal-lab",
    version,
    about = "Monte Carlo estimates of nodal component counts for Gaussian waves",
    after_help = "Run directories default to $NODAL_LAB_OUT/<experiment>-seed<seed> (or runs/... when unset)."
)]
pub struct Cli {
    /// Run directory (created if missing)
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Worker threads, 0 for one per core
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Planar estimate of compact components per R² for one spectral measure
    Estimate(EstimateArgs),
    /// Estimate for the random toral eigenfunction of eigenvalue n
    Torus(TorusArgs),
    /// Parameter sweeps: radius, mixing paths, Fourier pairs, lattice growth
    Sweep(SweepArgs),
    /// Lattice points on a circle, or a search for n whose angular measure is near a target
    Lattice(LatticeArgs),
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// Spectral measure expression
    #[arg(long, default_value = "uniform64", long_help = measure_help())]
    pub measure: String,
    /// Window radius R
    #[arg(long = "R", value_name = "R", default_value_t = 30.0)]
    pub radius: f64,
    /// Grid step h
    #[arg(long = "h", value_name = "H", default_value_t = 0.05)]
    pub step: f64,
    /// Number of trials
    #[arg(long, default_value_t = 200)]
    pub trials: usize,
    /// Base seed
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also count sign flips of the first partial derivative along nodal lines
    #[arg(long)]
    pub flips: bool,
}

#[derive(Debug, Args)]
pub struct TorusArgs {
    /// Eigenvalue n (a sum of two squares)
    #[arg(long)]
    pub n: u64,
    /// Grid size per axis [default: smallest 7-smooth N ≥ 8⌈√n⌉]
    #[arg(long = "N", value_name = "N")]
    pub size: Option<usize>,
    /// Number of trials
    #[arg(long, default_value_t = 200)]
    pub trials: usize,
    /// Base seed
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepKind {
    /// c·R² + b·R fit over window radii
    #[value(name = "R")]
    Radius,
    /// Mixing path from --from to --measure
    Continuity,
    /// Mixing path from cilleruelo to uniform64 with a coverage report
    Interval,
    /// Pairs of measures with equal fourth Fourier coefficient
    Fourier,
    /// Torus growth along n whose angular measure is near --target
    Growth,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Sweep kind
    #[arg(long, value_enum)]
    pub kind: SweepKind,
    /// Window radii, comma separated or a,b,...,c [default: 20,40,80 for R, 40 otherwise]
    #[arg(long = "R", value_name = "LIST")]
    pub radius: Option<String>,
    /// Mixing weights, comma separated or a,b,...,c
    #[arg(long = "t", value_name = "LIST", default_value = "0,0.05,0.1,0.2,0.4,0.7,1")]
    pub t: String,
    /// Grid step h
    #[arg(long = "h", value_name = "H", default_value_t = 0.05)]
    pub step: f64,
    /// Number of trials per sweep point
    #[arg(long, default_value_t = 200)]
    pub trials: usize,
    /// Base seed
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Measure for R sweeps, end point of continuity paths
    #[arg(long, default_value = "uniform64")]
    pub measure: String,
    /// Start point of continuity paths
    #[arg(long, default_value = "cilleruelo")]
    pub from: String,
    /// Measure pair "<a>;<b>" for Fourier scans (repeatable)
    #[arg(long = "pair", value_name = "A;B")]
    pub pairs: Vec<String>,
    /// Fourier scans also require equal eighth coefficients
    #[arg(long)]
    pub match_eighth: bool,
    /// Target angular measure for growth sweeps
    #[arg(long, default_value = "cilleruelo")]
    pub target: String,
    /// Smallest n for growth sweeps
    #[arg(long, default_value_t = 10)]
    pub nmin: u64,
    /// Largest n for growth sweeps
    #[arg(long, default_value_t = 5000)]
    pub nmax: u64,
    /// Number of n values in a growth sweep, spread evenly in log n
    #[arg(long, default_value_t = 5)]
    pub points: usize,
    /// Largest weak-* distance to the target for growth sweeps
    #[arg(long, default_value_t = 0.2)]
    pub max_distance: f64,
    /// Fourier harmonics used by the weak-* distance
    #[arg(long, default_value_t = 4)]
    pub harmonics: u32,
}

#[derive(Debug, Args)]
pub struct LatticeArgs {
    /// List the lattice points on the circle of radius √n
    #[arg(long, conflicts_with = "search")]
    pub n: Option<u64>,
    /// Search n in [nmin, nmax] by distance of μₙ to this measure
    #[arg(long, value_name = "MEASURE")]
    pub search: Option<String>,
    /// Smallest n searched
    #[arg(long, default_value_t = 1)]
    pub nmin: u64,
    /// Largest n searched
    #[arg(long, default_value_t = 1000)]
    pub nmax: u64,
    /// Number of search hits
    #[arg(long, default_value_t = 10)]
    pub top: usize,
    /// Fourier harmonics in the table and the search distance
    #[arg(long, default_value_t = 4)]
    pub harmonics: u32,
}

fn measure_help() -> String {
    format!("Spectral measure expression, one of: {MEASURE_FORMS}")
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
        {
            log::warn!("event=thread_pool_unchanged reason={e}");
        }
    }
    match commands::dispatch(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    if e.is_config() {
        EXIT_CONFIG
    } else {
        EXIT_RUNTIME
    }
}
