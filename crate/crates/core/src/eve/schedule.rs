use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::pe::child_cycles;
use super::CycleStats;
use crate::error::{Error, Result};
use crate::gene::GenomeId;
use crate::neat::{Mating, MatingPlan, ReproStats};
use crate::population::Population;

/// One child being built on one PE.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    pub pe: usize,
    pub mating: Mating,
}

/// Children grouped into rounds; a round runs on at most `num_pes` PEs at once.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeSchedule {
    pub num_pes: usize,
    pub rounds: Vec<Vec<Assignment>>,
}

impl PeSchedule {
    pub fn round_sizes(&self) -> Vec<usize> {
        self.rounds.iter().map(Vec::len).collect()
    }

    pub fn children(&self) -> usize {
        self.rounds.iter().map(Vec::len).sum()
    }
}

/// Greedy PE allocation. Children that share both parents form a group;
/// larger groups are placed first so siblings land in the same round and
/// can share parent reads. Rounds are filled in that order.
pub fn allocate_pes(plan: &MatingPlan, num_pes: usize) -> Result<PeSchedule> {
    if num_pes == 0 {
        return Err(Error::ZeroPes);
    }
    let mut groups: BTreeMap<(GenomeId, GenomeId), Vec<Mating>> = BTreeMap::new();
    for m in &plan.matings {
        groups.entry((m.parent_a, m.parent_b)).or_default().push(*m);
    }
    let mut groups: Vec<((GenomeId, GenomeId), Vec<Mating>)> = groups.into_iter().collect();
    // stable: equal-size groups keep parent-key order
    groups.sort_by_key(|g| std::cmp::Reverse(g.1.len()));

    let ordered: Vec<Mating> = groups.into_iter().flat_map(|(_, g)| g).collect();
    let rounds = ordered
        .chunks(num_pes)
        .map(|chunk| {
            chunk
                .iter()
                .enumerate()
                .map(|(pe, &mating)| Assignment { pe, mating })
                .collect()
        })
        .collect();
    Ok(PeSchedule { num_pes, rounds })
}

/// Cycle totals for a schedule given each child's own cycle count.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundTiming {
    /// Sum over rounds of the slowest PE in the round.
    pub cycles: u64,
    /// PE-cycles spent idle waiting for the slowest PE of each round.
    pub stall_cycles: u64,
}

pub fn schedule_timing(
    schedule: &PeSchedule,
    child_cycles: &BTreeMap<GenomeId, u64>,
) -> RoundTiming {
    let mut timing = RoundTiming::default();
    for round in &schedule.rounds {
        let costs: Vec<u64> = round
            .iter()
            .map(|a| child_cycles.get(&a.mating.child_id).copied().unwrap_or(0))
            .collect();
        let slowest = costs.iter().copied().max().unwrap_or(0);
        timing.cycles += slowest;
        timing.stall_cycles += costs.iter().map(|c| slowest - c).sum::<u64>();
    }
    timing
}

/// Cycle and operation counters for one generation. `per_child` lines up
/// with `plan.matings`; the reference path and the streaming path both
/// report through here so their counters agree.
pub fn account_cycles(
    schedule: &PeSchedule,
    plan: &MatingPlan,
    parents: &Population,
    per_child: &[ReproStats],
) -> Result<CycleStats> {
    if per_child.len() != plan.matings.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} child stats for {} matings",
            per_child.len(),
            plan.matings.len()
        )));
    }
    let genes = |id: GenomeId| {
        parents
            .get(id)
            .map(|g| g.gene_count() as u64)
            .ok_or_else(|| Error::InvalidGenome {
                genome_id: id,
                reason: "parent not in population".into(),
            })
    };
    let mut cycles = CycleStats {
        rounds: schedule.rounds.len() as u64,
        ..CycleStats::default()
    };
    let mut costs = BTreeMap::new();
    for (m, stats) in plan.matings.iter().zip(per_child) {
        costs.insert(m.child_id, child_cycles(stats));
        cycles.genes_streamed += genes(m.parent_a)? + genes(m.parent_b)?;
        cycles.ops_crossover += stats.crossovers;
        cycles.ops_mutation += stats.mutations();
    }
    let timing = schedule_timing(schedule, &costs);
    cycles.eve_cycles = timing.cycles;
    cycles.stall_cycles = timing.stall_cycles;
    Ok(cycles)
}
