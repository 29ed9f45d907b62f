//! Command-line front end: chain ingestion and validation, smile
//! calibration, RTIS portfolios, barrier super-hedging and figure data.

mod commands;

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BarrierRule {
    Spot,
    Fixed(f64),
}

fn parse_barrier(s: &str) -> Result<BarrierRule, String> {
    if s == "spot" {
        return Ok(BarrierRule::Spot);
    }
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(BarrierRule::Fixed(v)),
        _ => Err(format!("expected `spot` or a positive number, got `{s}`")),
    }
}

#[derive(Debug, Parser)]
#[command(name = "skewhedge", version, about = "Implied-skew beliefs, RTIS portfolios and barrier super-hedging")]
struct Cli {
    #[command(flatten)]
    run: RunConfig,
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Args)]
pub struct RunConfig {
    /// Input files (option chains in the documented CSV schema, or paths)
    #[arg(long, global = true, num_args = 1..)]
    pub input: Vec<PathBuf>,
    /// Output file, or directory for `calibrate`; stdout when omitted
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Barrier: `spot` uses each date's spot, a number fixes it
    #[arg(long, global = true, default_value = "spot", value_parser = parse_barrier)]
    pub barrier: BarrierRule,
    /// Put strike as a fraction of spot
    #[arg(long, global = true, default_value_t = 0.95)]
    pub put_moneyness: f64,
    /// Tail probability for the skew-ratio quantiles
    #[arg(long, global = true, default_value_t = 0.01)]
    pub alpha: f64,
    /// JSON file with `kappa_lower` and `kappa_upper`
    #[arg(long, global = true)]
    pub kappa_file: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 7)]
    pub seed: u64,
    /// Worker threads for calibration
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Price tolerance for surface checks, as a fraction of spot
    #[arg(long, global = true, default_value_t = 1e-9)]
    pub tol: f64,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check chain surfaces for static admissibility
    Validate,
    /// Fit PCLVG smiles and extract the skew-ratio quantiles
    Calibrate,
    /// Value the lower and upper RTIS portfolios on every date and maturity
    Rtis {
        /// Use this ratio for both portfolios instead of the kappa file
        #[arg(long)]
        kappa: Option<f64>,
    },
    /// Compare BHR and improved super-hedges and check them pathwise
    Superhedge {
        /// Strike of the up-and-out put
        #[arg(long)]
        strike: f64,
        /// Maturity in years
        #[arg(long)]
        maturity: f64,
        /// Upper skew ratio, overriding the kappa file
        #[arg(long)]
        kappa: Option<f64>,
        /// Spot paths as `time,spot` CSV files
        #[arg(long, num_args = 1..)]
        paths: Vec<PathBuf>,
        /// Number of simulated paths when no path files are given
        #[arg(long, default_value_t = 0)]
        n_paths: usize,
        #[arg(long, default_value_t = 500)]
        n_steps: usize,
    },
    /// Emit plot-ready CSV data for a figure
    Figure {
        /// g-payoff, g-kinks, bhr-payoff, smile, skew-series or dominating
        name: String,
        #[arg(long, default_value_t = 750.0)]
        strike: f64,
        #[arg(long, default_value_t = 675.0)]
        put_strike: f64,
        #[arg(long, default_value_t = 0.6)]
        ratio: f64,
        #[arg(long, default_value_t = 4000.0)]
        x_max: f64,
        #[arg(long, default_value_t = 10.0)]
        step: f64,
    },
    /// Write a synthetic option chain
    Synth {
        #[arg(long, default_value_t = 5)]
        n_dates: usize,
        /// Skew ratios cycled over dates
        #[arg(long, value_delimiter = ',', default_value = "0.6")]
        ratios: Vec<f64>,
        #[arg(long, default_value_t = 1000.0)]
        spot: f64,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Validate => commands::validate(&cli.run),
        Command::Calibrate => commands::calibrate(&cli.run),
        Command::Rtis { kappa } => commands::rtis(&cli.run, kappa),
        Command::Superhedge { strike, maturity, kappa, paths, n_paths, n_steps } => commands::superhedge(
            &cli.run,
            &commands::SuperhedgeArgs { strike, maturity, kappa, paths, n_paths, n_steps },
        ),
        Command::Figure { name, strike, put_strike, ratio, x_max, step } => {
            commands::figure(&cli.run, &commands::FigureArgs { name, strike, put_strike, ratio, x_max, step })
        }
        Command::Synth { n_dates, ratios, spot } => commands::synth(&cli.run, n_dates, ratios, spot),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
