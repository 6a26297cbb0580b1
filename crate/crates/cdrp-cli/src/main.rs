//! `cdrp`: sampler and experiment runner for constrained Brownian
//! objects and lattice directed polymers.
//!
//! Exit codes: 0 all checks pass, 1 at least one check failed, 2 usage
//! or validation error.

mod config;
mod polymer_cmd;
mod sample_cmd;
mod verify_cmd;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "cdrp", version, about = "Constrained Brownian samplers and polymer localization experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a path object and write it as CSV.
    Sample(sample_cmd::SampleArgs),
    /// Run a named verification suite and write per-check JSON reports.
    Verify(verify_cmd::VerifyArgs),
    /// Run the polymer localization/scaling experiments.
    Polymer(polymer_cmd::PolymerArgs),
}

fn main() {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Sample(args) => sample_cmd::run(args),
        Command::Verify(args) => verify_cmd::run(args),
        Command::Polymer(args) => polymer_cmd::run(args),
    };
    std::process::exit(code);
}

/// Print a validation error and return the usage exit code.
pub(crate) fn usage_error(msg: &str) -> i32 {
    eprintln!("error: {msg}");
    2
}

pub(crate) fn install_pool(threads: Option<usize>) -> Option<rayon::ThreadPool> {
    threads.map(|t| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build()
            .expect("thread pool")
    })
}
