use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use mmrelay_core::config::parse_seed;
use mmrelay_core::experiments::{parse_config, run_experiment, write_csv};

/// Rate experiments for multipair massive MIMO relaying.
#[derive(Parser)]
#[command(name = "mmrelay", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        config: PathBuf,
        /// Seed, decimal or 0x-prefixed hex.
        #[arg(long, value_parser = seed_arg)]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<usize>,
        /// CSV destination. Without it (and without `output` in the file) the CSV goes to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also run the Monte-Carlo chain.
        #[arg(long)]
        montecarlo: bool,
    },
    /// Parse a config file and print the resolved settings.
    Validate { config: PathBuf },
}

fn seed_arg(s: &str) -> std::result::Result<u64, String> {
    parse_seed(s).map_err(|e| e.to_string())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run {
            config,
            seed,
            trials,
            out,
            montecarlo,
        } => {
            let (_, mut spec) = parse_config(&config).with_context(|| format!("reading {}", config.display()))?;
            if let Some(s) = seed {
                spec.seed = s;
            }
            if let Some(t) = trials {
                spec.trials = t;
            }
            if out.is_some() {
                spec.output = out;
            }
            spec.montecarlo |= montecarlo;
            let result = run_experiment(&spec)?;
            match &spec.output {
                Some(path) => {
                    write_csv(path, &result).with_context(|| format!("writing {}", path.display()))?;
                    print!("{}", result.summary);
                    println!("wrote {}", path.display());
                }
                None => {
                    print!("{}", result.csv);
                    eprint!("{}", result.summary);
                }
            }
        }
        Command::Validate { config } => {
            let (_, spec) = parse_config(&config).with_context(|| format!("reading {}", config.display()))?;
            for (k, v) in spec.echo() {
                println!("{k}={v}");
            }
        }
    }
    Ok(())
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
