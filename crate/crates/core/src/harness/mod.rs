//! Experiment driver: evolution runs, parameter sweeps and population file
//! inspection.

mod config;
mod inspect;
mod run;
mod sweep;

pub use config::{EnvConfig, ReproMode, RunConfig, RunSection};
pub use inspect::{inspect, inspect_bytes};
pub use run::{
    evaluate_population, evaluation_seed, initial_population, population_file_name,
    reproduction_seed, run_evolve, stats_csv, GenRecord, RunOutcome, RunSummary,
};
pub use sweep::{run_sweep, sweep_csv, SweepAxis, SweepPoint};
