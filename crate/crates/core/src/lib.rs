//! Desk-scale simulator for hardware-accelerated neuroevolution.
//!
//! * [`gene`] and [`population`]: the 64-bit gene word, genomes and the population file.
//! * [`prng`]: XOR-WOW streams, one per consumer.
//! * [`neat`]: speciation, selection and the whole-genome reproduction oracle.
//! * [`eve`]: the streaming evolution engine (gene split, PE pipeline, gene merge, PE scheduling).
//! * [`interconnect`]: genome-buffer SRAM, point-to-point vs multicast delivery, energy ledger.
//! * [`adam`]: levelized, packed matrix-vector inference on a modeled systolic array.
//! * [`env`]: deterministic control tasks and the fitness runner.
//! * [`harness`]: evolution runs, sweeps and genome inspection.

pub mod adam;
pub mod env;
pub mod error;
pub mod eve;
pub mod gene;
pub mod harness;
pub mod interconnect;
pub mod neat;
pub mod population;
pub mod prng;

pub use error::{Error, Result};
