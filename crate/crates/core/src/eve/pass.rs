use std::collections::BTreeMap;

use rayon::prelude::*;

use super::merge::merge_stream;
use super::pe::{run_pe, PeState};
use super::schedule::{account_cycles, allocate_pes, PeSchedule};
use super::split::split_streams;
use super::CycleStats;
use crate::error::{Error, Result};
use crate::gene::{Genome, GenomeId};
use crate::neat::{ChildStreams, Mating, MatingPlan, NeatParams, ReproStats, Reproducer};
use crate::population::Population;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PassOutput {
    /// Children in plan order.
    pub children: Vec<(Genome, ReproStats)>,
    pub schedule: PeSchedule,
    pub cycles: CycleStats,
}

fn build_child(
    a: &Genome,
    b: &Genome,
    m: &Mating,
    params: &NeatParams,
    seed: u64,
) -> Result<(Genome, ReproStats)> {
    let pairs = split_streams(a, b)?;
    let mut pe = PeState::new(
        params.clone(),
        a.num_inputs,
        a.num_outputs,
        ChildStreams::new(seed, m.child_id),
    );
    let stream = run_pe(pairs, &mut pe)?;
    let (child, report) = merge_stream(&stream, m.child_id, a.num_inputs, a.num_outputs)?;
    let mut stats = pe.stats;
    stats.added_connections = report.candidates_kept as u64;
    Ok((child, stats))
}

/// Builds every child in the plan on a bank of `num_pes` PEs.
pub fn run_evolution_pass(
    parents: &Population,
    plan: &MatingPlan,
    params: &NeatParams,
    num_pes: usize,
    seed: u64,
) -> Result<PassOutput> {
    let schedule = allocate_pes(plan, num_pes)?;
    let lookup: BTreeMap<GenomeId, &Genome> =
        parents.genomes.iter().map(|g| (g.genome_id, g)).collect();
    let find = |id: GenomeId| {
        lookup
            .get(&id)
            .copied()
            .ok_or_else(|| Error::InvalidGenome {
                genome_id: id,
                reason: "parent not in population".into(),
            })
    };

    let children: Vec<(Genome, ReproStats)> = plan
        .matings
        .par_iter()
        .map(|m| build_child(find(m.parent_a)?, find(m.parent_b)?, m, params, seed))
        .collect::<Result<_>>()?;

    let stats: Vec<ReproStats> = children.iter().map(|(_, s)| *s).collect();
    let cycles = account_cycles(&schedule, plan, parents, &stats)?;
    Ok(PassOutput {
        children,
        schedule,
        cycles,
    })
}

/// Streaming reproduction behind the common [`Reproducer`] interface. The
/// schedule and cycle counts of the most recent pass are kept for reporting.
#[derive(Debug, Clone)]
pub struct EveReproducer {
    pub num_pes: usize,
    pub last_schedule: PeSchedule,
    pub last_cycles: CycleStats,
}

impl EveReproducer {
    pub fn new(num_pes: usize) -> Self {
        EveReproducer {
            num_pes,
            last_schedule: PeSchedule::default(),
            last_cycles: CycleStats::default(),
        }
    }
}

impl Reproducer for EveReproducer {
    fn reproduce(
        &mut self,
        parents: &Population,
        plan: &MatingPlan,
        params: &NeatParams,
        seed: u64,
    ) -> Result<Vec<(Genome, ReproStats)>> {
        let out = run_evolution_pass(parents, plan, params, self.num_pes, seed)?;
        self.last_schedule = out.schedule;
        self.last_cycles = out.cycles;
        Ok(out.children)
    }
}
