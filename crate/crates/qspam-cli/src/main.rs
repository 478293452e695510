//! `qspam`: campaign runner for separate SPAM characterization, injection
//! validation, GHZ mitigation comparison, and histogram correction.

use clap::{Parser, Subcommand};
use qspam_cli::campaign::{self, CampaignConfig, Mode};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "qspam", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct CommonArgs {
    /// Campaign config JSON.
    #[arg(long)]
    config: PathBuf,
    /// Output directory for report.json and CSV series (overrides the
    /// config's `out_dir`; default `.`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the config's random seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate per-qubit SPAM parameters from the eight circuits.
    Characterize(CommonArgs),
    /// Sweep an injected Rx angle; alpha_M should stay constant.
    ValidateInjection(CommonArgs),
    /// Compare mitigation strategies on noisy GHZ states.
    GhzCompare(CommonArgs),
    /// Correct a recorded histogram with given parameters.
    Mitigate(CommonArgs),
}

fn run(mode: Mode, args: &CommonArgs) -> Result<(), campaign::CampaignError> {
    let mut config = CampaignConfig::from_file(&args.config)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    let report = campaign::run(mode, &config)?;
    let out_dir = args
        .out
        .clone()
        .or_else(|| config.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    report.write(&out_dir)?;
    println!("report written to {}", out_dir.join("report.json").display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (mode, args) = match &cli.command {
        Command::Characterize(a) => (Mode::Characterize, a),
        Command::ValidateInjection(a) => (Mode::ValidateInjection, a),
        Command::GhzCompare(a) => (Mode::GhzCompare, a),
        Command::Mitigate(a) => (Mode::Mitigate, a),
    };
    match run(mode, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
