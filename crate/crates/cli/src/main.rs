//! `remotefc`: evaluate rate regions, trace boundaries, reproduce the binary
//! information-bottleneck example and run the binning simulator.
//!
//! Exit status: 0 on success, 1 on usage or validation errors, 2 when a
//! computational cap is exceeded.

mod commands;
mod modelfile;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use remotefc_core::region::{Coord, Mode};

#[derive(Debug, Parser)]
#[command(name = "remotefc", version, about = "Secure function computation over a remote source")]
pub struct Cli {
    /// Worker threads (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,

    /// Data file to write; CSV goes to stdout when omitted. Metadata is
    /// written to `<output>.meta`.
    #[arg(short = 'o', long = "output", global = true)]
    pub output: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LeakageArg {
    Auto,
    Estimate,
    Off,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a model file and report degradedness and admissibility.
    Validate { model: PathBuf },

    /// Corner of the region for the model file's auxiliary system.
    RegionEval {
        model: PathBuf,
        #[arg(long, default_value = "lossless")]
        mode: Mode,
    },

    /// Minimize one coordinate over a grid of pin levels.
    Boundary {
        model: PathBuf,
        #[arg(long, default_value = "lossless")]
        mode: Mode,
        /// r_s, r_w, r_dec, r_eve or d.
        #[arg(long, default_value = "r_s")]
        minimize: Coord,
        /// Coordinate held at most at each level, or `source_info` for
        /// I(U;X) held at least at each level.
        #[arg(long, default_value = "source_info")]
        pin: String,
        /// Number of levels.
        #[arg(long, default_value_t = 11)]
        grid: usize,
        /// Lowest level (default 0).
        #[arg(long)]
        lo: Option<f64>,
        /// Highest level (default: the pinned quantity at U = X̃).
        #[arg(long)]
        hi: Option<f64>,
        #[arg(long, default_value_t = 16)]
        restarts: usize,
        #[arg(long, default_value_t = 300)]
        iterations: usize,
        /// |U| of the searched channels (default |X̃|).
        #[arg(long)]
        u_size: Option<usize>,
        #[arg(long, default_value_t = 2)]
        v_size: usize,
        #[arg(long, default_value_t = 1)]
        q_size: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },

    /// Boundary curves of the binary symmetric example.
    IbCurve {
        #[arg(long, default_value_t = 0.06)]
        p: f64,
        #[arg(long, default_value_t = 0.15)]
        qdec: f64,
        #[arg(long = "M", value_delimiter = ',', default_value = "1,2,3")]
        m: Vec<usize>,
        #[arg(long, default_value_t = 201)]
        grid: usize,
        /// Crossover of the eavesdropper cascade.
        #[arg(long, default_value_t = remotefc_core::bottleneck::DEFAULT_Z_CROSSOVER)]
        z_crossover: f64,
        /// Add the Hamming distortion of f(x̃, y) = x̃ as column D.
        #[arg(long)]
        with_d: bool,
    },

    /// Curve maxima and their percent decreases relative to the first M.
    Fig3 {
        #[arg(long, default_value_t = 0.06)]
        p: f64,
        #[arg(long, default_value_t = 0.15)]
        qdec: f64,
        #[arg(long = "M", value_delimiter = ',', default_value = "1,2,3")]
        m: Vec<usize>,
        #[arg(long, default_value_t = 201)]
        grid: usize,
    },

    /// Multi-function inner bound at the model file's per-arm channels.
    MfEval {
        model: PathBuf,
        /// Number of arms (default: all declared).
        #[arg(long = "J")]
        j: Option<usize>,
        #[arg(long, default_value = "lossless")]
        mode: Mode,
    },

    /// Random-binning simulation with rates from the ε-margin rule.
    Simulate {
        model: PathBuf,
        /// Blocklengths, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "6")]
        n: Vec<usize>,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Independent code draws; trials are split evenly across them.
        #[arg(long, default_value_t = 1)]
        codes: u64,
        #[arg(long, value_enum, default_value = "auto")]
        leakage: LeakageArg,
        #[arg(long, default_value = "lossless")]
        mode: Mode,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let cap = e
                .chain()
                .any(|c| c.downcast_ref::<remotefc_core::Error>().is_some_and(|e| e.is_cap_exceeded()));
            ExitCode::from(if cap { 2 } else { 1 })
        }
    }
}
