use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod config;

use commands::{CmdError, Ctx};
use config::RunConfig;

/// Batch runner for closed G2-structure experiments on periodic grids.
#[derive(Parser)]
#[command(name = "g2flow", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Io {
    /// JSON run configuration; omitted fields take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output.dir`).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the identity battery.
    CheckIdentities(Io),
    /// Run the flow and write the diagnostics series.
    Flow(Io),
    /// Print the first nonzero flat Laplacian eigenvalue.
    Spectrum(Io),
    /// Check the L¹ maximum principle over seeded runs.
    Moser(Io),
    /// Run the linear parabolic solver on closed data.
    Heat(Io),
}

fn run(name: &'static str, io: Io, f: fn(&Ctx) -> Result<bool, CmdError>) -> Result<bool, CmdError> {
    let cfg = match &io.config {
        Some(p) => RunConfig::load(p).map_err(CmdError::Invalid)?,
        None => RunConfig::default(),
    };
    cfg.validate(name).map_err(CmdError::Invalid)?;
    let out = io.out.unwrap_or_else(|| cfg.output.dir.clone());
    std::fs::create_dir_all(&out)
        .map_err(|e| CmdError::Failed(format!("cannot create {}: {e}", out.display())))?;
    f(&Ctx { cfg, command: name, out })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::CheckIdentities(io) => run("check-identities", io, commands::check_identities),
        Command::Flow(io) => run("flow", io, commands::flow),
        Command::Spectrum(io) => run("spectrum", io, commands::spectrum),
        Command::Moser(io) => run("moser", io, commands::moser),
        Command::Heat(io) => run("heat", io, commands::heat),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("g2flow: check failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("g2flow: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}
