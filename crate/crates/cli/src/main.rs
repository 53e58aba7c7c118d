mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::*;
use crate::config::Config;

#[derive(Parser)]
#[command(name = "tapfuse", version, about = "Uncertainty-aware touch typing decoder")]
struct Cli {
    /// TOML file with one table per command; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a Witten-Bell n-gram model and write it as ARPA.
    TrainLm(TrainLmArgs),
    /// Build the word trie from a vocabulary file.
    BuildTrie(BuildTrieArgs),
    /// Simulate noisy observation streams for a phrase set.
    Simulate(SimulateArgs),
    /// Decode an observation stream.
    Decode(DecodeArgs),
    /// Score decoded text and observations against ground truth.
    Evaluate(EvaluateArgs),
    /// Run a seeded simulation sweep over decoder conditions.
    Ablate(AblateArgs),
    /// Serve the playground API.
    Serve(ServeArgs),
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let config = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::empty(),
    };
    match cli.command {
        Command::TrainLm(a) => train_lm(config.layered("train-lm", &a)?),
        Command::BuildTrie(a) => build_trie(config.layered("build-trie", &a)?),
        Command::Simulate(a) => simulate(config.layered("simulate", &a)?),
        Command::Decode(a) => decode(config.layered("decode", &a)?),
        Command::Evaluate(a) => evaluate(config.layered("evaluate", &a)?),
        Command::Ablate(a) => ablate(config.layered("ablate", &a)?),
        Command::Serve(a) => serve(config.layered("serve", &a)?),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
