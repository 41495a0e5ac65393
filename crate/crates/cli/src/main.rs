use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use evosim::harness::{inspect, run_evolve, run_sweep, sweep_csv, RunConfig, SweepAxis};

#[derive(Parser)]
#[command(
    name = "evosim",
    version,
    about = "Streaming neuroevolution hardware simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve a population until it reaches the target fitness or runs out of generations
    Evolve {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the seed in the config file
        #[arg(long)]
        seed: Option<u64>,
        /// Directory for stats.csv, summary.json and per-generation population files
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Repeat a fixed-seed run once per value of one parameter
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// pe_count, noc_mode or population
        #[arg(long)]
        axis: SweepAxis,
        /// Comma-separated axis values
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
        /// Write the combined CSV here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the genomes stored in a population file
    Inspect { file: PathBuf },
}

fn load(path: &Path) -> Result<RunConfig> {
    RunConfig::load(path).with_context(|| format!("loading config {}", path.display()))
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Evolve { config, seed, out } => {
            let mut config = load(&config)?;
            if let Some(seed) = seed {
                config.run.seed = seed;
            }
            if out.is_some() {
                config.run.output_dir = out;
            }
            let outcome = run_evolve(&config)?;
            let s = &outcome.summary;
            match s.solved_generation {
                Some(g) => println!(
                    "{:?} seed {}: reached {} in generation {g}",
                    s.env, s.seed, s.best_fitness
                ),
                None => println!(
                    "{:?} seed {}: best {} after {} generations (target {})",
                    s.env, s.seed, s.best_fitness, s.generations, s.target_fitness
                ),
            }
            Ok(if outcome.converged() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            })
        }
        Command::Sweep {
            config,
            axis,
            values,
            out,
        } => {
            let config = load(&config)?;
            let points = run_sweep(&config, axis, &values)?;
            let table = sweep_csv(axis, &points)?;
            match out {
                Some(path) => std::fs::write(&path, table)
                    .with_context(|| format!("writing {}", path.display()))?,
                None => print!("{table}"),
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Inspect { file } => {
            print!(
                "{}",
                inspect(&file).with_context(|| format!("inspecting {}", file.display()))?
            );
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
