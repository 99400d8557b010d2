//! Command-line front end for reasoning-chain alignment analysis.

mod commands;
mod config;
mod output;
mod rows;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cotalign_core::entropy::EntropyError;

use commands::{errors, fit, report, score, scos, synth};
use config::{GlobalArgs, RunConfig};

#[derive(Debug, Parser)]
#[command(
    name = "cotalign",
    version,
    about = "Score the semantic alignment of reasoning chains, detect reasoning errors, fit their impact, and select consistent samples"
)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Score candidate chains against their references
    Score(score::ScoreArgs),
    /// Profile the four alignment-error types per chain
    Errors(errors::ErrorsArgs),
    /// Fit the alignment-penalty decomposition by least squares
    Fit(fit::FitArgs),
    /// Sample-and-select chains by semantic consistency
    Scos(scos::ScosArgs),
    /// Generate offline fixtures
    #[command(subcommand)]
    Synth(synth::SynthCommand),
    /// Render previously written artifacts as a text report
    Report(report::ReportArgs),
}

fn run(cli: &Cli) -> anyhow::Result<()> {
    let config = RunConfig::resolve(&cli.global)?;
    if config.jobs > 0 {
        // Only the first global pool wins; later calls are no-ops.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(config.jobs)
            .build_global();
    }
    match &cli.command {
        Command::Score(args) => score::run(args, &config),
        Command::Errors(args) => errors::run(args, &config),
        Command::Fit(args) => fit::run(args, &config),
        Command::Scos(args) => scos::run(args, &config),
        Command::Synth(command) => synth::run(command),
        Command::Report(args) => report::run(args, &config),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            let no_valid = err
                .chain()
                .any(|cause| matches!(cause.downcast_ref(), Some(EntropyError::NoValidChains)));
            if no_valid {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
