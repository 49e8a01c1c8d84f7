//! `skellam-stein`: Skellam tables, Stein factors, and bound verification
//! from the command line.
//!
//! Exit status is 0 on success, 1 when a checked bound is violated, and 2 on
//! malformed input.

mod commands;
mod output;

use std::io::{self, Write};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use output::Format;

#[derive(Parser, Debug)]
#[command(name = "skellam-stein", version, about = "Skellam distribution and Stein-factor toolkit")]
pub struct Cli {
    /// Output format.
    #[arg(long, value_enum, default_value = "human", global = true)]
    pub format: Format,
    /// Seed for every random draw; always echoed in the output.
    #[arg(long, default_value_t = 0, global = true)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Skellam probabilities, tables, and draws.
    #[command(subcommand)]
    Dist(DistCmd),
    /// Stein solutions, factors, and bounds.
    #[command(subcommand)]
    Stein(SteinCmd),
    /// Exact TV against the application bounds.
    #[command(subcommand)]
    Verify(VerifyCmd),
}

#[derive(Args, Debug, Clone, Copy)]
pub struct RateArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub l1: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub l2: f64,
    /// Allow zero rates (the law of a signed Poisson variable).
    #[arg(long)]
    pub extended: bool,
}

#[derive(Subcommand, Debug)]
pub enum DistCmd {
    /// Probability of a single value.
    Pmf {
        #[command(flatten)]
        rates: RateArgs,
        #[arg(long, allow_negative_numbers = true)]
        k: i64,
    },
    /// Probability window holding all but `tol` of the mass.
    Table {
        #[command(flatten)]
        rates: RateArgs,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
    },
    /// Independent draws.
    Sample {
        #[command(flatten)]
        rates: RateArgs,
        #[arg(long)]
        n: usize,
    },
}

#[derive(Subcommand, Debug)]
pub enum SteinCmd {
    /// Closed-form Stein-factor bounds.
    Bounds {
        #[command(flatten)]
        rates: RateArgs,
        #[arg(long, default_value_t = skellam_stein::stein::DEFAULT_QUAD_TOL)]
        quad_tol: f64,
    },
    /// Solution of the Stein equation at one state.
    Solve {
        #[command(flatten)]
        rates: RateArgs,
        /// `k>=a`, `k<=a`, `{a,b,...}`, `{}` or `all`.
        #[arg(long)]
        set: String,
        #[arg(long)]
        x: u64,
        #[arg(long)]
        y: u64,
        #[arg(long, default_value_t = skellam_stein::stein::DEFAULT_QUAD_TOL)]
        quad_tol: f64,
    },
    /// Exact Stein factors on a state grid, checked against the bounds.
    Factors {
        #[command(flatten)]
        rates: RateArgs,
        /// Restrict to first (1) or second (2) differences.
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
        order: Option<u8>,
        /// Largest x and y of the grid; defaults to `max(10, ⌈Λ + 6√Λ⌉)`.
        #[arg(long)]
        grid: Option<u64>,
        /// Also evaluate on the doubled grid and report the change.
        #[arg(long)]
        saturation: bool,
        #[arg(long, default_value_t = skellam_stein::stein::DEFAULT_QUAD_TOL)]
        quad_tol: f64,
    },
    /// Sum of absolute second differences of the pmf against `1/(λ1+λ2)`.
    Conjecture {
        #[command(flatten)]
        rates: RateArgs,
        #[arg(long, default_value_t = 1e-14)]
        tol: f64,
    },
}

#[derive(Subcommand, Debug)]
pub enum VerifyCmd {
    /// Edge-count discrepancy of a noisy random graph.
    Graph {
        /// JSON model file.
        #[arg(long, conflicts_with = "homogeneous", required_unless_present = "homogeneous")]
        model: Option<std::path::PathBuf>,
        /// `n p r s` for n identical vertex pairs.
        #[arg(long, num_args = 4, value_names = ["N", "P", "R", "S"])]
        homogeneous: Option<Vec<String>>,
        /// Monte Carlo draws compared with the exact law.
        #[arg(long, default_value_t = 0)]
        trials: usize,
    },
    /// Haar coefficient under one-bin spillover.
    Haar {
        /// Newline-separated intensities.
        #[arg(long)]
        signal: std::path::PathBuf,
        #[arg(long)]
        p: f64,
        #[arg(long, requires = "loc", conflicts_with_all = ["pos", "sweep"])]
        scale: Option<u32>,
        #[arg(long, requires = "scale")]
        loc: Option<usize>,
        /// Explicit positive window, comma-separated bin indices.
        #[arg(long, value_delimiter = ',', requires = "neg", conflicts_with = "sweep")]
        pos: Option<Vec<usize>>,
        #[arg(long, value_delimiter = ',', requires = "pos")]
        neg: Option<Vec<usize>>,
        /// Every dyadic window at these scales.
        #[arg(long, value_delimiter = ',')]
        sweep: Option<Vec<u32>>,
        /// Monte Carlo draws compared with the coefficient laws.
        #[arg(long, default_value_t = 0)]
        trials: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(report) => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            if let Err(e) = report.render(cli.format, &mut lock).and_then(|_| lock.flush()) {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
            if report.violation {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
