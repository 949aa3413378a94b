use std::process::ExitCode;

use clap::Parser;
use rerank_kg_cli::{run, Cli};

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            eprintln!("{}", e.record());
            ExitCode::FAILURE
        }
    }
}
