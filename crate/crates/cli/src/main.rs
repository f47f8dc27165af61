use std::path::PathBuf;
use std::process::ExitCode;

use bohmflow::runner::{self, Command, GlobalOptions};
use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "bohmflow", version, about = "Pilot-wave dynamics scenarios, acceptance checks and flow spectra")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args, Debug)]
struct Global {
    /// Configuration file (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; defaults to the config value, then $BOHMFLOW_OUT.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Maximum number of concurrent jobs.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// `key=value` applied after the config file; repeatable.
    #[arg(long = "override", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    /// Reject unknown configuration keys (default).
    #[arg(long, global = true, overrides_with = "lenient")]
    strict: bool,
    /// Warn about unknown configuration keys instead of rejecting them.
    #[arg(long, global = true, overrides_with = "strict")]
    lenient: bool,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Evolve a scenario and write snapshots, time series and scenario outputs.
    Run { config: Option<PathBuf> },
    /// Run the acceptance checks of one catalog scenario or all of them.
    Accept {
        #[arg(default_value = "all")]
        target: String,
    },
    /// Lyapunov spectra of a coefficient-flow scenario.
    Lyapunov { config: Option<PathBuf> },
    /// Bohmian trajectory batch for a grid scenario.
    Traj { config: Option<PathBuf> },
    /// Print the header and a summary of a .cfield, .rfield or CSV artifact.
    Inspect { file: PathBuf },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let opts = GlobalOptions {
        config: cli.global.config,
        out: cli.global.out,
        workers: cli.global.workers,
        overrides: cli.global.overrides,
        lenient: cli.global.lenient && !cli.global.strict,
    };
    let cmd = match cli.command {
        Cmd::Run { config } => Command::Run { config },
        Cmd::Accept { target } => Command::Accept { target },
        Cmd::Lyapunov { config } => Command::Lyapunov { config },
        Cmd::Traj { config } => Command::Traj { config },
        Cmd::Inspect { file } => Command::Inspect { file },
    };
    match runner::execute(&cmd, &opts) {
        Ok(outcome) => {
            print!("{}", outcome.summary);
            if let Some(dir) = &outcome.out_dir {
                log::info!("outputs in {}", dir.display());
            }
            if !outcome.passed {
                eprintln!("error kind=acceptance_failed exit=1 message=\"one or more acceptance checks failed\"");
            }
            ExitCode::from(outcome.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("{}", runner::error_line(&e));
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
