use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use linexp3_cli::checks::run_suite;
use linexp3_cli::run::{cmd_run, cmd_sweep, Sink};
use linexp3_cli::{load_config, parse_grid, worker_pool, CliError};

#[derive(Parser)]
#[command(name = "linexp3", version, about = "Adversarial linear contextual bandit experiments")]
struct Cli {
    /// Worker threads (default: one per logical core).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// CSV output path; the JSON summary goes next to it.
    #[arg(long, global = true)]
    output: Option<String>,
    /// Master seed, overriding the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run all replications of one configuration.
    Run { config: PathBuf },
    /// Run one configuration per horizon and fit the regret exponent.
    Sweep {
        config: PathBuf,
        /// Comma-separated horizons, e.g. 1024,2048,4096.
        #[arg(long)]
        grid: String,
    },
    /// Run a verification suite: estimators, mgr, potential, bounds or all.
    Verify { suite: String },
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run { config } => {
            let mut cfg = load_config(&config).map_err(config_io_is_usage)?;
            if let Some(seed) = cli.seed {
                cfg.seed = seed;
            }
            let sink = Sink::new(cli.output.as_deref().or(cfg.output.as_deref()));
            let pool = worker_pool(cli.threads)?;
            let outcome = cmd_run(&cfg, &pool, &sink)?;
            for w in &outcome.resolved.warnings {
                eprintln!("warning: {w}");
            }
            Ok(())
        }
        Command::Sweep { config, grid } => {
            let mut cfg = load_config(&config).map_err(config_io_is_usage)?;
            if let Some(seed) = cli.seed {
                cfg.seed = seed;
            }
            let grid = parse_grid(&grid)?;
            let sink = Sink::new(cli.output.as_deref().or(cfg.output.as_deref()));
            let pool = worker_pool(cli.threads)?;
            let outcome = cmd_sweep(&cfg, &grid, &pool, &sink)?;
            eprintln!("fitted exponent: {:.4}", outcome.exponent);
            Ok(())
        }
        Command::Verify { suite } => {
            let pool = worker_pool(cli.threads)?;
            let checks = pool
                .install(|| run_suite(&suite))
                .ok_or(CliError::UnknownSuite(suite))?;
            for c in &checks {
                println!("{c}");
            }
            let failed = checks.iter().filter(|c| c.failed()).count();
            if failed > 0 {
                return Err(CliError::Verification(failed));
            }
            Ok(())
        }
    }
}

fn config_io_is_usage(err: CliError) -> CliError {
    match err {
        CliError::Io { path, source } => CliError::Usage(format!("{path}: {source}")),
        other => other,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = if err.use_stderr() { 1 } else { 0 };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
