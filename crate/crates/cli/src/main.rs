use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use roughflow_cli::{load_config, run, Kind, RunOptions};

/// Runs a roughflow experiment described by a TOML config file.
#[derive(Parser)]
#[command(name = "roughflow", version)]
struct Cli {
    /// experiment kind; must match `kind` in the file
    #[arg(value_enum)]
    kind: Kind,
    #[arg(long)]
    config: PathBuf,
    /// master seed, overriding the file
    #[arg(long)]
    seed: Option<u64>,
    /// output directory, overriding the file
    #[arg(long)]
    out: Option<PathBuf>,
    /// worker threads
    #[arg(long, env = "ROUGHFLOW_WORKERS")]
    workers: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let opts = RunOptions { seed: cli.seed, out: cli.out, workers: cli.workers };
    let result = load_config(&cli.config).and_then(|cfg| run(cli.kind, &cfg, &opts));
    match result {
        Ok(m) => {
            println!("{}: wrote {} artifacts to {}", cli.kind.as_str(), m.artifacts.len(), m.out.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
