use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use safechain_cli::commands::{self, Overrides};
use safechain_cli::config::ModeConfig;

#[derive(Parser)]
#[command(
    name = "safechain",
    version,
    about = "Safety-filtered integrator-chain simulations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one controller and write the trajectory, metrics and plots.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum)]
        controller: Option<ModeConfig>,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run nominal, sbcbf and srcbf side by side.
    Compare {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the gains and check every level at the initial state.
    CheckGains {
        #[arg(long)]
        config: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let mut out = std::io::stdout().lock();
    let mut err = std::io::stderr();
    let result = match cli.command {
        Command::Simulate {
            config,
            controller,
            dt,
            seed,
            out: dir,
        } => {
            let o = Overrides {
                controller,
                dt,
                seed,
                out: dir,
            };
            commands::simulate(&config, &o, &mut out, &mut err)
        }
        Command::Compare {
            config,
            seed,
            out: dir,
        } => {
            let o = Overrides {
                seed,
                out: dir,
                ..Overrides::default()
            };
            commands::compare(&config, &o, &mut out, &mut err)
        }
        Command::CheckGains { config } => commands::check_gains(&config, &mut out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
