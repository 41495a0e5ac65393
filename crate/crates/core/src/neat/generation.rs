use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::reproduce::{reproduce_reference, ChildStreams, ReproStats};
use super::select::{select_parents, MatingPlan};
use super::species::{remove_stagnant, share_fitness, speciate, SpeciesPartition};
use super::NeatParams;
use crate::error::{Error, Result};
use crate::gene::{Genome, GenomeId};
use crate::population::Population;
use crate::prng::seed_stream;

/// Stream id reserved for parent selection; child streams use `child_id << 3 | stage`.
pub const SELECTION_STREAM: u64 = u64::MAX;

/// Turns a mating plan into children. Implemented by the whole-genome
/// reference and by the streaming engine.
pub trait Reproducer {
    /// Returns the children in plan order together with their operation counts.
    fn reproduce(
        &mut self,
        parents: &Population,
        plan: &MatingPlan,
        params: &NeatParams,
        seed: u64,
    ) -> Result<Vec<(Genome, ReproStats)>>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ReferenceReproducer;

impl Reproducer for ReferenceReproducer {
    fn reproduce(
        &mut self,
        parents: &Population,
        plan: &MatingPlan,
        params: &NeatParams,
        seed: u64,
    ) -> Result<Vec<(Genome, ReproStats)>> {
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
        plan.matings
            .iter()
            .map(|m| {
                let mut rng = ChildStreams::new(seed, m.child_id);
                reproduce_reference(
                    find(m.parent_a)?,
                    find(m.parent_b)?,
                    m.child_id,
                    params,
                    &mut rng,
                )
            })
            .collect()
    }
}

/// Speciation memory and id counters carried from one generation to the next.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvolutionState {
    pub species: SpeciesPartition,
    pub next_genome_id: GenomeId,
}

impl EvolutionState {
    pub fn new(pop: &Population) -> Self {
        EvolutionState {
            species: SpeciesPartition::default(),
            next_genome_id: pop
                .genomes
                .iter()
                .map(|g| g.genome_id + 1)
                .max()
                .unwrap_or(0),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GenStats {
    /// Species alive this generation, before stagnation removal.
    pub species_count: usize,
    pub plan: MatingPlan,
    pub totals: ReproStats,
    pub per_child: Vec<ReproStats>,
}

impl GenStats {
    /// Parent slots filled per genome; sums to twice the child count.
    pub fn reuse_histogram(&self) -> BTreeMap<GenomeId, u32> {
        self.plan.parent_uses()
    }
}

/// Speciate, share fitness, select parents and reproduce one generation.
///
/// Fitness is read from the genomes themselves. The returned population is
/// sorted by genome id and has the same size as the input.
pub fn step_generation(
    state: &mut EvolutionState,
    pop: &Population,
    params: &NeatParams,
    seed: u64,
    reproducer: &mut dyn Reproducer,
) -> Result<(Population, GenStats)> {
    if pop.is_empty() {
        return Err(Error::EmptyPopulation);
    }
    let fitness = pop.fitness_map()?;
    let mut partition = speciate(pop, &state.species, params);
    partition.record_fitness(&fitness)?;
    let species_count = partition.species.len();
    let active = remove_stagnant(&partition, &fitness, params);
    let adjusted = share_fitness(&active, &fitness)?;

    let mut rng = seed_stream(seed, SELECTION_STREAM);
    let plan = select_parents(
        pop,
        &active,
        &fitness,
        &adjusted,
        params,
        &mut rng,
        state.next_genome_id,
    )?;
    state.next_genome_id += plan.len() as GenomeId;
    state.species = active;

    let produced = reproducer.reproduce(pop, &plan, params, seed)?;
    let mut totals = ReproStats::default();
    let mut per_child = Vec::with_capacity(produced.len());
    let mut genomes: Vec<Genome> = plan
        .elites
        .iter()
        .filter_map(|id| pop.get(*id))
        .map(|g| Genome {
            fitness: None,
            ..g.clone()
        })
        .collect();
    for (child, stats) in produced {
        totals.accumulate(&stats);
        per_child.push(stats);
        genomes.push(child);
    }
    genomes.sort_by_key(|g| g.genome_id);

    let next = Population::new(pop.generation_index + 1, genomes);
    Ok((
        next,
        GenStats {
            species_count,
            plan,
            totals,
            per_child,
        },
    ))
}
