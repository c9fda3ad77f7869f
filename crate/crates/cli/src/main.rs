use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use synctrl::{Command, ExperimentConfig, Options};

#[derive(Parser)]
#[command(version, about = "Symbolic synchronisation control of coupled van der Pol oscillators")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// TOML experiment file; built-in defaults if omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Overrides gp.seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: one per core).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Omit the timestamped banner line from CSV files.
    #[arg(long, global = true)]
    no_banner: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Arnold-tongue sweep of the uncontrolled pair.
    Sweep,
    /// GP search for a control law.
    Gp,
    /// Simulate one control law.
    Simulate {
        /// Control law, e.g. "-x0d" or "mul(neg(x0d), exp(k))".
        #[arg(long, allow_hyphen_values = true)]
        expr: Option<String>,
    },
    /// Continuation of stationary states of the averaged system.
    Continue,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, expr) = match cli.command {
        Cmd::Sweep => (Command::Sweep, None),
        Cmd::Gp => (Command::Gp, None),
        Cmd::Simulate { expr } => (Command::Simulate, expr),
        Cmd::Continue => (Command::Continue, None),
    };
    let opts = Options { out: cli.out, seed: cli.seed, jobs: cli.jobs, banner: !cli.no_banner, expr };
    let cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p),
        None => ExperimentConfig::parse(""),
    };
    let result = cfg.and_then(|cfg| synctrl::run(command, cfg, &opts));
    match result {
        Ok(files) => {
            for f in files {
                eprintln!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("synctrl: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
