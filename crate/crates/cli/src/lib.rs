//! Command-line front end: ingest, mine, score, rerank, evaluate, analyze.

mod commands;
pub mod config;
pub mod error;
mod tables;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use config::{CombineKind, CutoffKind, Overrides, RunConfig};
pub use error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "rerank-kg",
    version,
    about = "Inductive link prediction with cascaded re-ranking"
)]
pub struct Cli {
    /// Run configuration (TOML).
    #[arg(long, global = true, default_value = "config.toml")]
    config: PathBuf,
    /// Seed for negative sampling and sampled DOT queries.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Query-level worker threads; results do not depend on it.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Restrict mining and scoring to one rule length.
    #[arg(long, global = true, value_parser = clap::value_parser!(u8).range(1..=3))]
    hops: Option<u8>,
    /// Pool cutoff for the configured cascade.
    #[arg(long, global = true, value_enum)]
    cutoff: Option<CutoffKind>,
    /// Score fusion inside the pool.
    #[arg(long, global = true, value_enum)]
    combine: Option<CombineKind>,
    /// Output directory; overrides `output` in the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Load and validate the split, write a graph summary.
    Ingest,
    /// Mine path rules from the training graph.
    Mine,
    /// Score test-query candidates with the configured scorers.
    Score,
    /// Run the retriever/re-ranker cascade on the test queries.
    Rerank,
    /// Compute Hits@k and MRR for every strategy.
    Evaluate,
    /// Overlap, reachability and set-difference tables plus DOT subgraphs.
    Analyze,
    /// Generate a synthetic inductive benchmark with a ready config.
    Synth,
}

/// Executes one parsed command line and returns the summary it reports.
pub fn run(cli: Cli) -> Result<String, CliError> {
    let hops = cli.hops.map(usize::from);
    if let Command::Synth = cli.command {
        let dir = cli.out.unwrap_or_else(|| PathBuf::from("synthetic"));
        return commands::synth(&dir, cli.seed.unwrap_or(42));
    }
    let overrides = Overrides {
        seed: cli.seed,
        workers: cli.workers,
        cutoff: cli.cutoff,
        combine: cli.combine,
        out: cli.out,
    };
    let config = RunConfig::load(&cli.config, &overrides)?;
    match cli.command {
        Command::Ingest => commands::ingest(&config),
        Command::Mine => commands::mine(&config, hops),
        Command::Score => commands::score(&config, hops),
        Command::Rerank => commands::rerank(&config),
        Command::Evaluate => commands::evaluate_cmd(&config),
        Command::Analyze => commands::analyze(&config),
        Command::Synth => unreachable!(),
    }
}
