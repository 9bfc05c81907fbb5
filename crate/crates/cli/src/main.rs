//! `coevolve`: simulate co-evolving opinions and ties, evaluate closed
//! forms, predict blow-up, detect communities, sweep convergence rates and
//! check invariants.
//!
//! Exit codes: 0 clean, 1 invariant failure, 2 usage or configuration,
//! 3 numerical failure.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::Settings;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Invariant(String),
    Numerical(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Invariant(_) => 1,
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Invariant(m) => write!(f, "invariant check failed: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "coevolve",
    version,
    about = "Co-evolving opinions and signed ties"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the dynamics and report the outcome. With --out DIR writes
    /// trajectory.csv, trajectory.json and report.json.
    Simulate {
        #[command(flatten)]
        settings: Settings,
    },
    /// Evaluate W(t) by the power series and the closed forms.
    ClosedForm {
        #[command(flatten)]
        settings: Settings,
        /// Comma-separated evaluation times.
        #[arg(long)]
        times: Option<String>,
        /// Evenly spaced times in (0, t-max] when --times is absent.
        #[arg(long, default_value_t = 1.0)]
        t_max: f64,
        #[arg(long, default_value_t = 10)]
        points: usize,
    },
    /// Predict the blow-up time of a commuting start.
    Predict {
        #[command(flatten)]
        settings: Settings,
    },
    /// Plant seed opinions on a labelled graph and read off the communities.
    Communities {
        #[command(flatten)]
        settings: Settings,
        /// Share of labelled nodes seeded with their label.
        #[arg(long)]
        fraction: Option<f64>,
        /// Repeat over this many consecutive rng seeds and average.
        #[arg(long, default_value_t = 1)]
        repeats: u64,
    },
    /// Iterations to threshold across a family of starts, as CSV.
    Sweep {
        #[command(flatten)]
        settings: Settings,
        /// Comma-separated graph sizes.
        #[arg(long)]
        n_values: Option<String>,
        /// Samples per size.
        #[arg(long, default_value_t = 30)]
        samples: usize,
    },
    /// Run the invariant battery; exits 1 if any check fails.
    Verify {
        #[command(flatten)]
        settings: Settings,
        /// Comma-separated subset of checks (default: all).
        #[arg(long)]
        checks: Option<String>,
        #[arg(long)]
        horizon: Option<f64>,
        /// Perturb W halfway through by this amount (negative control).
        #[arg(long)]
        perturb: Option<f64>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate { settings } => commands::simulate(settings),
        Command::ClosedForm {
            settings,
            times,
            t_max,
            points,
        } => commands::closed_form(settings, times, t_max, points),
        Command::Predict { settings } => commands::predict(settings),
        Command::Communities {
            settings,
            fraction,
            repeats,
        } => commands::communities(settings, fraction, repeats),
        Command::Sweep {
            settings,
            n_values,
            samples,
        } => commands::sweep(settings, n_values, samples),
        Command::Verify {
            settings,
            checks,
            horizon,
            perturb,
        } => commands::verify(settings, checks, horizon, perturb),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("coevolve: {e}");
            ExitCode::from(e.code())
        }
    }
}
