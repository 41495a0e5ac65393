//! Streaming reproduction engine.
//!
//! Parent genomes are streamed gene by gene through a bank of processing
//! elements (PEs). Each PE builds one child per round through a fixed
//! pipeline of crossover, perturbation, deletion and addition, and a merge
//! unit re-sorts the output into a canonical genome.

mod merge;
mod pass;
mod pe;
mod schedule;
mod split;

use serde::{Deserialize, Serialize};

pub use merge::{merge_stream, MergeReport, Origin, StreamGene};
pub use pass::{run_evolution_pass, EveReproducer, PassOutput};
pub use pe::{
    add_stage, child_cycles, crossover_stage, delete_stage, perturb_stage, run_pe, PeState,
    ADD_CONNECTION_CYCLES, ADD_NODE_CYCLES, LOAD_CYCLES,
};
pub use schedule::{
    account_cycles, allocate_pes, schedule_timing, Assignment, PeSchedule, RoundTiming,
};
pub use split::{split_streams, AlignedPair, GeneSplit, PairKind};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CycleStats {
    pub eve_cycles: u64,
    pub genes_streamed: u64,
    pub ops_crossover: u64,
    pub ops_mutation: u64,
    pub stall_cycles: u64,
    pub rounds: u64,
}
