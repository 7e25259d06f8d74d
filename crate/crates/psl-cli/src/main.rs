use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

/// Batch runner for the planar string laboratory.
#[derive(Parser)]
#[command(name = "psl", version, about)]
struct Cli {
    /// Path to a JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Directory the artifacts are written into.
    #[arg(long)]
    out: PathBuf,
    /// Analysis to run, e.g. invariants or mass-curve.
    #[arg(long)]
    command: String,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match psl_cli::run_from_path(&cli.config, &cli.command, &cli.out) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("{}", err.stderr_json());
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
