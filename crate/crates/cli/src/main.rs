use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use scdg::harness::{cmd_check, cmd_convergence, cmd_run, CheckOptions, Outcome, SUITES};
use scdg::RunConfig;

#[derive(Parser)]
#[command(
    name = "scdg",
    version,
    about = "Shock-capturing space-time DG solver for 1D conservation laws"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one problem and write snapshots, diagnostics and a summary.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides the config and SCDG_OUT_ROOT).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Refinement study at h, h/2, ...
    Convergence {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 3)]
        levels: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Randomized property checks.
    Check {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(SUITES))]
        suite: String,
        /// Seed and system are taken from this config when given.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, hide = true, allow_hyphen_values = true)]
        diffusion_floor: Option<f64>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() {
                Outcome::UsageError.code() as u8
            } else {
                0
            });
        }
    };
    let (outcome, message) = match cli.command {
        Command::Run { config, out } => cmd_run(&config, out.as_deref()),
        Command::Convergence { config, levels, out } => cmd_convergence(&config, levels, out.as_deref()),
        Command::Check {
            suite,
            config,
            seed,
            diffusion_floor,
        } => {
            let mut opts = CheckOptions {
                seed: seed.unwrap_or(0),
                system: None,
                diffusion_floor,
            };
            if let Some(path) = config {
                match RunConfig::load(&path) {
                    Ok(cfg) => {
                        opts.seed = seed.unwrap_or(cfg.seed);
                        opts.system = Some(cfg.system.name.clone());
                    }
                    Err(e) => {
                        eprintln!("error: {e}");
                        return ExitCode::from(Outcome::UsageError.code() as u8);
                    }
                }
            }
            cmd_check(&suite, &opts)
        }
    };
    if outcome == Outcome::Success {
        println!("{message}");
    } else {
        eprintln!("error: {message}");
    }
    ExitCode::from(outcome.code() as u8)
}
