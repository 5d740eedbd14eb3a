use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use qswitch_cli::config::{Format, BASELINE_CONFIG};
use qswitch_cli::run::apply_overrides;
use qswitch_cli::{parse_config, run, CliError, Command};

/// Rate and fidelity models for entanglement-distribution switches.
///
/// Worker threads follow RAYON_NUM_THREADS; results do not depend on it.
#[derive(Parser)]
#[command(name = "qswitch", version)]
struct Args {
    #[arg(value_enum)]
    command: Command,
    /// JSON run configuration; the bundled baseline if omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Monte Carlo sample count.
    #[arg(long)]
    samples: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

fn main_inner(args: Args) -> Result<String, CliError> {
    let text = match &args.config {
        Some(path) => std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        })?,
        None => BASELINE_CONFIG.to_string(),
    };
    let mut config = parse_config(&text)?;
    apply_overrides(&mut config, args.seed, args.samples, args.out, args.format);
    run(args.command, &config)
}

fn main() -> ExitCode {
    match main_inner(Args::parse()) {
        Ok(line) => {
            println!("{line}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.line());
            ExitCode::FAILURE
        }
    }
}
