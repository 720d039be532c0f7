//! `corridor`: run, sweep, train and evaluate corridor clearance scenarios.
//!
//! Exit codes: 0 ok, 2 bad config or usage, 3 infeasible scenario,
//! 4 simulation fault, 5 training divergence.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "corridor", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one scenario per seed; writes the step log and metrics.
    Run(Overrides),
    /// Run an (x_a, d) grid for each controller and diff the results.
    Sweep(Overrides),
    /// Train a policy; writes the checkpoint and learning curve.
    Train(Overrides),
    /// Evaluate a checkpoint on an (x_a, d) grid.
    Eval(Overrides),
}

#[derive(Args, Debug, Clone)]
pub struct Overrides {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
}

impl Overrides {
    pub fn workers(&self) -> usize {
        self.workers
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
            .max(1)
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("CORRIDOR_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() {
                error::CONFIG as u8
            } else {
                0
            });
        }
    };
    let (ov, run): (&Overrides, fn(_, _, _) -> _) = match &cli.command {
        Command::Run(o) => (o, commands::run),
        Command::Sweep(o) => (o, commands::sweep),
        Command::Train(o) => (o, commands::train_cmd),
        Command::Eval(o) => (o, commands::eval),
    };
    if ov.workers == Some(0) {
        eprintln!("error: --workers must be positive");
        return ExitCode::from(error::CONFIG as u8);
    }
    match run(&ov.config, &ov.out, ov) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code as u8)
        }
    }
}
