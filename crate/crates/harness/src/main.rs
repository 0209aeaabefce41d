mod checks;
mod commands;
mod config;
mod error;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use checks::CheckName;
use config::RunConfig;
use error::Result;

#[derive(Parser)]
#[command(name = "convbond", version, about = "Callable convertible bond solver and free-boundary diagnostics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve once and write the surface and free boundary.
    Solve(Common),
    /// Run diagnostic checks and write a report; exits 4 if any fails.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Comma-separated subset of checks; overrides the config.
        #[arg(long, value_delimiter = ',')]
        checks: Option<Vec<CheckName>>,
    },
    /// Grid-refinement study with cells doubled per level.
    Refine {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 3)]
        levels: usize,
    },
    /// Binomial-lattice reference values in the golden-file layout.
    Oracle(Common),
}

#[derive(clap::Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output_dir` from the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn load(&self) -> Result<(RunConfig, PathBuf)> {
        let cfg = RunConfig::load(&self.config)?;
        let out = self
            .out
            .clone()
            .or_else(|| cfg.output_dir.clone())
            .unwrap_or_else(|| Path::new("out").to_owned());
        Ok((cfg, out))
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Solve(common) => {
            let (cfg, out) = common.load()?;
            commands::cmd_solve(&cfg, &out)
        }
        Command::Verify { common, checks } => {
            let (cfg, out) = common.load()?;
            let checks = checks.unwrap_or_else(|| cfg.checks.clone());
            commands::cmd_verify(&cfg, &checks, &out).map(|_| ())
        }
        Command::Refine { common, levels } => {
            let (cfg, out) = common.load()?;
            commands::cmd_refine(&cfg, levels, &out).map(|_| ())
        }
        Command::Oracle(common) => {
            let (cfg, out) = common.load()?;
            commands::cmd_oracle(&cfg, &out)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
