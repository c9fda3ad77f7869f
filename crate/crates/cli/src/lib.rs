//! Config-driven experiments on a pair of coupled van der Pol oscillators:
//! Arnold-tongue sweeps, GP searches for control laws, single controlled
//! simulations and continuation of the averaged system. Each command writes
//! plot-ready CSV.

pub mod calc;
pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod pool;

pub use commands::Options;
pub use config::ExperimentConfig;
pub use error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Sweep,
    Gp,
    Simulate,
    Continue,
}

/// Runs one command on a loaded config and returns the files written.
pub fn run(command: Command, cfg: ExperimentConfig, opts: &Options) -> Result<Vec<std::path::PathBuf>, CliError> {
    let cfg = commands::resolve(cfg, opts);
    match command {
        Command::Sweep => commands::sweep(&cfg, opts),
        Command::Gp => commands::gp(&cfg, opts),
        Command::Simulate => commands::simulate(&cfg, opts),
        Command::Continue => commands::continuation(&cfg, opts),
    }
}
