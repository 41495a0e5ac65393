//! Inference engine for irregular evolved networks.
//!
//! A genome is levelized into frontiers of independent nodes. The nodes of
//! each frontier are packed into one dense matrix-vector product that runs on
//! a modeled systolic array; nodes with non-sum aggregation are evaluated on
//! a scalar side path.

mod level;
mod network;
mod pack;

pub use level::{levelize, LevelPlan};
pub use network::{aggregate, apply_node, infer, Inference, Network};
pub use pack::{pack_frontier, pack_layout, systolic_mvm, tile_cycles, MvmResult, PackedMvm};
