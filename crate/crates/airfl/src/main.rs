use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use airfl::experiment::{run_experiment, CliOverrides, ExperimentKind, ExperimentSpec};

/// Batch driver for analog-aggregation device selection and the federated
/// learning test bench.
#[derive(Parser)]
#[command(name = "airfl", version, about)]
struct Cli {
    /// Flat `key = value` configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for CSV artifacts.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Number of seeds (runs use seeds 0..N).
    #[arg(long, global = true)]
    seeds: Option<usize>,
    /// Use the full-scale deployment (K=20, M=20, N=64) instead of the
    /// desk-scale defaults (K=10, M=8, N=16).
    #[arg(long, global = true)]
    full_scale: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// One selection run per seed and scheme at fixed parameters.
    Select,
    /// Mean selected-device count versus the error threshold.
    SweepGamma,
    /// Mean selected-device count versus the number of reflecting elements.
    SweepElements,
    /// Mean selected-device count versus the number of receive antennas.
    SweepAntennas,
    /// Device selection followed by federated-averaging runs.
    Fl,
    /// Run the self-check oracle suites.
    Validate,
}

impl Command {
    fn kind(&self) -> ExperimentKind {
        match self {
            Command::Select => ExperimentKind::Select,
            Command::SweepGamma => ExperimentKind::SweepGamma,
            Command::SweepElements => ExperimentKind::SweepElements,
            Command::SweepAntennas => ExperimentKind::SweepAntennas,
            Command::Fl => ExperimentKind::Fl,
            Command::Validate => ExperimentKind::Validate,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let overrides = CliOverrides {
        out: cli.out.clone(),
        seeds: cli.seeds,
        full_scale: cli.full_scale,
    };
    let config_text = match &cli.config {
        Some(path) => match std::fs::read_to_string(path) {
            Ok(text) => text,
            Err(e) => {
                eprintln!("error: cannot read {}: {e}", path.display());
                return ExitCode::FAILURE;
            }
        },
        None => String::new(),
    };
    let spec = match ExperimentSpec::parse_str(&config_text, Some(cli.command.kind()), &overrides) {
        Ok(spec) => spec,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    };

    match run_experiment(&spec) {
        Ok(report) => {
            for file in &report.files {
                println!("wrote {}", file.display());
            }
            if spec.kind == ExperimentKind::Validate {
                let mut failed = 0usize;
                for check in &report.validation {
                    let status = if check.passed { "PASS" } else { "FAIL" };
                    println!("[{status}] {}: {}", check.name, check.detail);
                    if !check.passed {
                        failed += 1;
                    }
                }
                if failed > 0 {
                    eprintln!("{failed} validation check(s) failed");
                    return ExitCode::FAILURE;
                }
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
