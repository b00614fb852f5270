mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{Command, Config};
use error::CliError;

#[derive(Parser)]
#[command(
    name = "hokm",
    version,
    about = "Higher-order Kuramoto simulations with pinning control"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,

    /// Flat key = value configuration file
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Worker threads (defaults to the available cores)
    #[arg(long, global = true)]
    workers: Option<usize>,

    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Override a configuration key, e.g. --set k1=0.5
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Averaged order parameter over a (K1, K2) grid
    Sweep,
    /// Averaged order parameter against the number of pinned nodes
    Pin,
    /// Coupling switch with and without control
    Switch,
    /// Basin fractions of the final states
    Basin,
    /// Control cost per mode
    Cost,
    /// Run the built-in consistency checks
    Validate,
    /// Write a hypergraph file
    Gen,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Sweep => Command::Sweep,
            Cmd::Pin => Command::Pin,
            Cmd::Switch => Command::Switch,
            Cmd::Basin => Command::Basin,
            Cmd::Cost => Command::Cost,
            Cmd::Validate => Command::Validate,
            Cmd::Gen => Command::Gen,
        }
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    if let Some(w) = cli.workers {
        if w == 0 {
            return Err(CliError::Config("--workers must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    let overrides = cli
        .set
        .iter()
        .map(|s| config::parse_override(s))
        .collect::<Result<Vec<_>, _>>()?;
    let cfg = Config::load(cli.command.into(), cli.config.as_deref(), &overrides, cli.seed)?;
    for path in commands::run(&cfg, &cli.out)? {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("hokm: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
