//! `clayer`: simulation and verification suites.
//!
//! Exit codes: 0 success, 1 configuration error, 2 divergence abort,
//! 3 smallness condition fails, 4 a verification check fails.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::EXIT_CONFIG;
use crate::config::RunConfig;

#[derive(Parser, Debug)]
#[command(
    name = "clayer",
    version,
    about = "Boundary-layer MHD simulator and verification harness"
)]
struct Cli {
    /// TOML configuration; every section is optional.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the configured output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Only errors are logged and no summary line is printed.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Integrate the reduced system and write energy reports and checkpoints.
    Simulate,
    /// Smallness, decay and master-inequality checks along a trajectory.
    VerifyTheorem,
    /// Randomized product-law cases and the exhaustive triangle-power grid.
    VerifyLemma {
        /// Overrides the configured number of cases.
        #[arg(long)]
        cases: Option<usize>,
    },
    /// Term-order tables for both boundary-layer scalings.
    VerifyScaling,
    /// Manufactured-solution convergence study.
    Mms,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.quiet { "error" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let mut cfg = match &cli.config {
        Some(p) => match RunConfig::load(p) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("configuration error: {e}");
                return ExitCode::from(EXIT_CONFIG);
            }
        },
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.output_dir = o.clone();
    }
    if let Command::VerifyLemma { cases: Some(n) } = cli.command {
        cfg.lemma.cases = n;
    }
    if let Err(e) = cfg.validate() {
        eprintln!("configuration error: {e}");
        return ExitCode::from(EXIT_CONFIG);
    }

    let result = match cli.command {
        Command::Simulate => commands::simulate_cmd(&cfg),
        Command::VerifyTheorem => commands::verify_theorem(&cfg),
        Command::VerifyLemma { .. } => commands::verify_lemma(&cfg),
        Command::VerifyScaling => commands::verify_scaling(&cfg),
        Command::Mms => commands::mms(&cfg),
    };
    match result {
        Ok(out) => {
            if !cli.quiet {
                println!("{}", out.line);
            }
            ExitCode::from(out.code)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
    }
}
