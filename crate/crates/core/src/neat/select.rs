use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::species::{by_fitness_desc, SpeciesPartition};
use super::NeatParams;
use crate::error::{Error, Result};
use crate::gene::GenomeId;
use crate::population::Population;
use crate::prng::XorWowState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mating {
    pub child_id: GenomeId,
    /// The fitter parent.
    pub parent_a: GenomeId,
    pub parent_b: GenomeId,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MatingPlan {
    pub matings: Vec<Mating>,
    /// Genomes copied unchanged into the next generation.
    pub elites: Vec<GenomeId>,
    /// Eligible parents per species, best first.
    pub survivors: Vec<(u32, Vec<GenomeId>)>,
}

impl MatingPlan {
    pub fn len(&self) -> usize {
        self.matings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matings.is_empty()
    }

    /// Number of parent slots each genome fills (two per child).
    pub fn parent_uses(&self) -> BTreeMap<GenomeId, u32> {
        let mut uses = BTreeMap::new();
        for m in &self.matings {
            *uses.entry(m.parent_a).or_insert(0) += 1;
            *uses.entry(m.parent_b).or_insert(0) += 1;
        }
        uses
    }

    /// Largest number of distinct children sharing one parent.
    pub fn max_parent_reuse(&self) -> u32 {
        let mut children = BTreeMap::<GenomeId, u32>::new();
        for m in &self.matings {
            *children.entry(m.parent_a).or_insert(0) += 1;
            if m.parent_b != m.parent_a {
                *children.entry(m.parent_b).or_insert(0) += 1;
            }
        }
        children.values().copied().max().unwrap_or(0)
    }
}

/// Splits `total` proportionally to `weights` with largest-remainder rounding.
fn apportion(total: usize, weights: &[f64]) -> Vec<usize> {
    let sum: f64 = weights.iter().sum();
    if weights.is_empty() || sum <= 0.0 {
        return vec![0; weights.len()];
    }
    let exact: Vec<f64> = weights.iter().map(|w| total as f64 * w / sum).collect();
    let mut quota: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let assigned: usize = quota.iter().sum();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let (ra, rb) = (exact[a] - exact[a].floor(), exact[b] - exact[b].floor());
        rb.partial_cmp(&ra)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    for &k in order.iter().cycle().take(total.saturating_sub(assigned)) {
        quota[k] += 1;
    }
    quota
}

/// Picks the elites, the eligible parents of each species, the offspring
/// quota of each species and finally the parent pair of every child.
///
/// Children get consecutive ids starting at `first_child_id`.
pub fn select_parents(
    pop: &Population,
    partition: &SpeciesPartition,
    fitness: &BTreeMap<GenomeId, f64>,
    adjusted: &BTreeMap<GenomeId, f64>,
    params: &NeatParams,
    rng: &mut XorWowState,
    first_child_id: GenomeId,
) -> Result<MatingPlan> {
    if pop.is_empty() || partition.species.is_empty() {
        return Err(Error::EmptyPopulation);
    }
    for g in &pop.genomes {
        if !fitness.contains_key(&g.genome_id) {
            return Err(Error::MissingFitness(g.genome_id));
        }
    }
    for s in &partition.species {
        if let Some(id) = s.members.iter().find(|id| !adjusted.contains_key(id)) {
            return Err(Error::MissingFitness(*id));
        }
    }

    let mut ranked: Vec<GenomeId> = pop.genomes.iter().map(|g| g.genome_id).collect();
    ranked.sort_by(by_fitness_desc(fitness));
    let elites: Vec<GenomeId> = ranked
        .into_iter()
        .take(params.elitism.min(pop.len()))
        .collect();
    let children = pop.len() - elites.len();

    let survivors: Vec<(u32, Vec<GenomeId>)> = partition
        .species
        .iter()
        .map(|s| {
            let mut members = s.members.clone();
            members.sort_by(by_fitness_desc(adjusted));
            let keep = ((params.survival_fraction * members.len() as f64).ceil() as usize)
                .clamp(1, members.len());
            members.truncate(keep);
            (s.id, members)
        })
        .collect();

    let floor = partition
        .species
        .iter()
        .flat_map(|s| s.members.iter().map(|id| adjusted[id]))
        .fold(f64::INFINITY, f64::min);
    let mut weights: Vec<f64> = partition
        .species
        .iter()
        .map(|s| s.members.iter().map(|id| adjusted[id] - floor).sum())
        .collect();
    let total: f64 = weights.iter().sum();
    if total.is_nan() || total <= 0.0 {
        weights = partition
            .species
            .iter()
            .map(|s| s.members.len() as f64)
            .collect();
    }
    let quota = apportion(children, &weights);

    let mut matings = Vec::with_capacity(children);
    let mut child_id = first_child_id;
    for ((_, parents), &q) in survivors.iter().zip(&quota) {
        for _ in 0..q {
            let a = parents[rng.next_index(parents.len())];
            let b = parents[rng.next_index(parents.len())];
            let (parent_a, parent_b) = if by_fitness_desc(fitness)(&a, &b).is_le() {
                (a, b)
            } else {
                (b, a)
            };
            matings.push(Mating {
                child_id,
                parent_a,
                parent_b,
            });
            child_id += 1;
        }
    }

    Ok(MatingPlan {
        matings,
        elites,
        survivors,
    })
}
