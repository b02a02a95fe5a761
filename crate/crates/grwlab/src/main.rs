mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::EXIT_CONFIG;

/// Spacelike graphs with prescribed mean curvature f'(u)/f(u) in GRW spacetimes.
#[derive(Parser)]
#[command(name = "grwlab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve H(u) = f'(u)/f(u) from the configured initial data.
    Solve {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (default: output.directory of the config).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run an identity suite: connection, laplacian, integral, el, lk or maxprinciple.
    Verify {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        suite: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate the spacetime conditions of a warp over an interval.
    Conditions {
        /// cosh | constant:V | exponential:SCALE,RATE | polynomial:C0,C1,...
        #[arg(long, allow_hyphen_values = true)]
        warp: String,
        /// sphere[:SUBDIVISIONS] | torus[:N[,L1,L2]] | circle[:N[,L]]
        #[arg(long)]
        fiber: String,
        /// A,B
        #[arg(long, allow_hyphen_values = true)]
        interval: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Repeat `solve` over values of one numeric configuration key.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// section.key, e.g. init.amplitude
        #[arg(long)]
        axis: String,
        #[arg(long, allow_hyphen_values = true)]
        values: String,
        /// Run the sweep points on several threads.
        #[arg(long)]
        parallel: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let result = match cli.command {
        Command::Solve { config, out } => commands::cmd_solve(&config, out),
        Command::Verify { config, suite, out } => commands::cmd_verify(&config, suite, out),
        Command::Conditions { warp, fiber, interval, out } => commands::cmd_conditions(&warp, &fiber, &interval, out),
        Command::Sweep { config, axis, values, parallel, out } => {
            commands::cmd_sweep(&config, &axis, &values, parallel, out)
        }
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_CONFIG as u8)
        }
    }
}
