use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dampcert::{run, Command, Overrides};

#[derive(Parser)]
#[command(name = "dampcert", version, about = "Decentralized damping certificates for inverter-based grids")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check every device's local gain certificate at its configured parameters.
    Certify(RunArgs),
    /// Map per-device feasible parameter regions.
    Sweep(RunArgs),
    /// Closed-loop poles under the static network.
    Poles(RunArgs),
    /// Step response to a power disturbance.
    Simulate(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Worker threads (default: available parallelism).
    #[arg(long)]
    workers: Option<usize>,
    /// Boundary sample spacing.
    #[arg(long)]
    spacing: Option<f64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let (command, args) = match cli.command {
        Cmd::Certify(a) => (Command::Certify, a),
        Cmd::Sweep(a) => (Command::Sweep, a),
        Cmd::Poles(a) => (Command::Poles, a),
        Cmd::Simulate(a) => (Command::Simulate, a),
    };
    let overrides = Overrides { workers: args.workers, spacing: args.spacing, out: args.out };
    match run(command, &args.config, &overrides) {
        Ok(outcome) => {
            println!("{}: {:?}", command.name(), outcome);
            ExitCode::from(outcome.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("dampcert {}: {e}", command.name());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
