//! `padic-radial <command> --config <path> [--out <path>]`

mod commands;
mod config;
mod error;

use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use crate::commands::Command;
use crate::config::RunConfig;
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "padic-radial",
    version,
    about = "Fractional operators and Cauchy problems on radial functions"
)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// Run configuration (key = value lines).
    #[arg(long)]
    config: PathBuf,
    /// CSV destination; overrides `output` in the config. Defaults to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    let cfg = RunConfig::load(&cli.config)?;
    let table = commands::run(&cfg, cli.command)?;
    match cli.out.as_ref().or(cfg.output.as_ref()) {
        Some(path) => {
            let file = File::create(path)
                .map_err(|e| CliError::Output(format!("cannot create {}: {e}", path.display())))?;
            table.write_to(BufWriter::new(file))
        }
        None => table.write_to(std::io::stdout().lock()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.report_line());
            ExitCode::from(e.code().1 as u8)
        }
    }
}
