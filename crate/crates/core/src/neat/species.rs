use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::NeatParams;
use crate::error::{Error, Result};
use crate::gene::{Genome, GenomeId};
use crate::population::Population;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Species {
    pub id: u32,
    pub representative: Genome,
    pub members: Vec<GenomeId>,
    /// Best raw fitness of the species, one entry per generation it lived.
    pub best_history: Vec<f64>,
}

impl Species {
    /// True once the last `window` generations brought no improvement over
    /// everything seen before them.
    pub fn is_stagnant(&self, window: u32) -> bool {
        let window = window as usize;
        if window == 0 || self.best_history.len() <= window {
            return false;
        }
        let (before, recent) = self.best_history.split_at(self.best_history.len() - window);
        let best_before = before.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        recent.iter().all(|&f| f <= best_before)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SpeciesPartition {
    pub species: Vec<Species>,
    pub next_species_id: u32,
}

impl SpeciesPartition {
    pub fn species_of(&self, genome: GenomeId) -> Option<&Species> {
        self.species.iter().find(|s| s.members.contains(&genome))
    }

    pub fn member_count(&self) -> usize {
        self.species.iter().map(|s| s.members.len()).sum()
    }

    /// Appends each species' best raw fitness to its history.
    pub fn record_fitness(&mut self, fitness: &BTreeMap<GenomeId, f64>) -> Result<()> {
        for s in &mut self.species {
            let mut best = f64::NEG_INFINITY;
            for id in &s.members {
                best = best.max(*fitness.get(id).ok_or(Error::MissingFitness(*id))?);
            }
            s.best_history.push(best);
        }
        Ok(())
    }
}

/// Key-aligned compatibility distance: `c_d * U / N + c_w * mean|Δ|`, where
/// `U` counts keys present in only one genome, `N` is the larger gene count
/// and the mean runs over matched keys (bias for nodes, weight for
/// connections).
pub fn compatibility_distance(g1: &Genome, g2: &Genome, params: &NeatParams) -> f64 {
    let mut unmatched = 0usize;
    let mut matched = 0usize;
    let mut diff_sum = 0.0f64;

    let (mut i, mut j) = (0, 0);
    while i < g1.nodes.len() || j < g2.nodes.len() {
        match (g1.nodes.get(i), g2.nodes.get(j)) {
            (Some(a), Some(b)) if a.id == b.id => {
                matched += 1;
                diff_sum += (a.bias as f64 - b.bias as f64).abs();
                i += 1;
                j += 1;
            }
            (Some(a), Some(b)) if a.id < b.id => {
                unmatched += 1;
                i += 1;
            }
            (Some(_), None) => {
                unmatched += 1;
                i += 1;
            }
            _ => {
                unmatched += 1;
                j += 1;
            }
        }
    }

    let (mut i, mut j) = (0, 0);
    while i < g1.connections.len() || j < g2.connections.len() {
        match (g1.connections.get(i), g2.connections.get(j)) {
            (Some(a), Some(b)) if a.key() == b.key() => {
                matched += 1;
                diff_sum += (a.weight as f64 - b.weight as f64).abs();
                i += 1;
                j += 1;
            }
            (Some(a), Some(b)) if a.key() < b.key() => {
                unmatched += 1;
                i += 1;
            }
            (Some(_), None) => {
                unmatched += 1;
                i += 1;
            }
            _ => {
                unmatched += 1;
                j += 1;
            }
        }
    }

    let n = g1.gene_count().max(g2.gene_count()).max(1) as f64;
    let mean_diff = if matched == 0 {
        0.0
    } else {
        diff_sum / matched as f64
    };
    params.compat_coeff_unmatched * unmatched as f64 / n + params.compat_coeff_weight * mean_diff
}

/// Greedy assignment against the previous generation's representatives.
/// New species are founded by the first genome that fits nowhere; every
/// surviving species takes its first member as the next representative.
pub fn speciate(
    pop: &Population,
    previous: &SpeciesPartition,
    params: &NeatParams,
) -> SpeciesPartition {
    let mut species: Vec<Species> = previous
        .species
        .iter()
        .map(|s| Species {
            members: Vec::new(),
            ..s.clone()
        })
        .collect();
    let mut next_species_id = previous.next_species_id;

    for genome in &pop.genomes {
        let home = species.iter().position(|s| {
            compatibility_distance(&s.representative, genome, params) < params.compat_threshold
        });
        match home {
            Some(k) => species[k].members.push(genome.genome_id),
            None => {
                species.push(Species {
                    id: next_species_id,
                    representative: genome.clone(),
                    members: vec![genome.genome_id],
                    best_history: Vec::new(),
                });
                next_species_id += 1;
            }
        }
    }

    species.retain(|s| !s.members.is_empty());
    for s in &mut species {
        if let Some(first) = pop.get(s.members[0]) {
            s.representative = first.clone();
        }
    }
    SpeciesPartition {
        species,
        next_species_id,
    }
}

/// Explicit fitness sharing: each fitness divided by its species' size.
pub fn share_fitness(
    partition: &SpeciesPartition,
    fitness: &BTreeMap<GenomeId, f64>,
) -> Result<BTreeMap<GenomeId, f64>> {
    let mut adjusted = BTreeMap::new();
    for s in &partition.species {
        let size = s.members.len() as f64;
        for id in &s.members {
            let f = fitness.get(id).ok_or(Error::MissingFitness(*id))?;
            adjusted.insert(*id, f / size);
        }
    }
    Ok(adjusted)
}

/// Orders genome ids by descending fitness, lower id first on ties.
pub(crate) fn by_fitness_desc(
    fitness: &BTreeMap<GenomeId, f64>,
) -> impl Fn(&GenomeId, &GenomeId) -> Ordering + '_ {
    move |a, b| {
        let (fa, fb) = (fitness[a], fitness[b]);
        fb.partial_cmp(&fa)
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(b))
    }
}

/// Drops species that stopped improving, except the one holding the global
/// best genome.
pub fn remove_stagnant(
    partition: &SpeciesPartition,
    fitness: &BTreeMap<GenomeId, f64>,
    params: &NeatParams,
) -> SpeciesPartition {
    let mut ids: Vec<GenomeId> = fitness.keys().copied().collect();
    ids.sort_by(by_fitness_desc(fitness));
    let best = ids.first().copied();
    let species = partition
        .species
        .iter()
        .filter(|s| {
            !s.is_stagnant(params.species_stagnation)
                || best.is_some_and(|b| s.members.contains(&b))
        })
        .cloned()
        .collect();
    SpeciesPartition {
        species,
        next_species_id: partition.next_species_id,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gene::{Activation, ConnectionGene, NodeGene};

    fn base(id: u32) -> Genome {
        let mut g = Genome::initial(id, 2, 1, Activation::Sigmoid);
        g.connections.truncate(1);
        g
    }

    #[test]
    fn identical_genomes_have_zero_distance() {
        let g = base(0);
        assert_eq!(compatibility_distance(&g, &g, &NeatParams::default()), 0.0);
    }

    #[test]
    fn one_extra_connection() {
        let g1 = base(0);
        assert_eq!(g1.gene_count(), 4);
        let mut g2 = base(1);
        g2.connections.push(ConnectionGene::new(1, 2, 0.0));
        let d = compatibility_distance(&g1, &g2, &NeatParams::default());
        assert!((d - 0.2).abs() < 1e-12);
        assert_eq!(d, compatibility_distance(&g2, &g1, &NeatParams::default()));
    }

    #[test]
    fn weight_term_uses_matched_mean() {
        let g1 = base(0);
        let mut g2 = base(1);
        g2.connections[0].weight = 2.0;
        g2.nodes[0].bias = 1.0;
        // 4 matched keys, |Δ| total 3
        let d = compatibility_distance(&g1, &g2, &NeatParams::default());
        assert!((d - 0.5 * 3.0 / 4.0).abs() < 1e-12);
    }

    fn pop_of(genomes: Vec<Genome>) -> Population {
        Population::new(0, genomes)
    }

    #[test]
    fn identical_population_is_one_species() {
        let pop = pop_of((0..20).map(base).collect());
        let part = speciate(&pop, &SpeciesPartition::default(), &NeatParams::default());
        assert_eq!(part.species.len(), 1);
        assert_eq!(part.member_count(), 20);
    }

    #[test]
    fn far_clusters_split() {
        let mut genomes: Vec<Genome> = (0..10).map(base).collect();
        for id in 10..20 {
            let mut g = base(id);
            g.connections[0].weight = 30.0;
            for n in &mut g.nodes {
                n.bias = 10.0;
            }
            for n in 10..20 {
                g.nodes.push(NodeGene::with_defaults(n, Activation::Tanh));
            }
            for n in 10..20 {
                g.connections.push(ConnectionGene::new(0, n, 25.0));
            }
            genomes.push(g);
        }
        let pop = pop_of(genomes);
        let part = speciate(&pop, &SpeciesPartition::default(), &NeatParams::default());
        assert_eq!(part.species.len(), 2);
        let mut all: Vec<_> = part
            .species
            .iter()
            .flat_map(|s| s.members.clone())
            .collect();
        all.sort();
        assert_eq!(all, (0..20).collect::<Vec<_>>());
    }

    #[test]
    fn representatives_persist_across_generations() {
        let pop = pop_of((0..5).map(base).collect());
        let first = speciate(&pop, &SpeciesPartition::default(), &NeatParams::default());
        let next = pop_of((5..10).map(base).collect());
        let second = speciate(&next, &first, &NeatParams::default());
        assert_eq!(second.species.len(), 1);
        assert_eq!(second.species[0].id, first.species[0].id);
        assert_eq!(second.species[0].representative.genome_id, 5);
    }

    #[test]
    fn sharing_divides_by_species_size() {
        let mut part = SpeciesPartition::default();
        part.species.push(Species {
            id: 0,
            representative: base(0),
            members: vec![0],
            best_history: vec![],
        });
        part.species.push(Species {
            id: 1,
            representative: base(1),
            members: vec![1, 2],
            best_history: vec![],
        });
        let fit: BTreeMap<_, _> = [(0, 7.0), (1, 4.0), (2, 4.0)].into();
        let adj = share_fitness(&part, &fit).unwrap();
        assert_eq!(adj[&0], 7.0);
        assert_eq!(adj[&1], 2.0);
        assert_eq!(adj[&2], 2.0);
        let missing: BTreeMap<_, _> = [(0, 7.0)].into();
        assert!(matches!(
            share_fitness(&part, &missing),
            Err(Error::MissingFitness(1))
        ));
    }

    #[test]
    fn stagnation_window() {
        let mut s = Species {
            id: 0,
            representative: base(0),
            members: vec![0],
            best_history: vec![1.0, 2.0],
        };
        assert!(!s.is_stagnant(2));
        s.best_history.extend([2.0, 1.5]);
        assert!(s.is_stagnant(2));
        assert!(!s.is_stagnant(0));
        s.best_history.push(3.0);
        assert!(!s.is_stagnant(2));
    }

    #[test]
    fn stagnant_species_with_global_best_survives() {
        let mut part = SpeciesPartition::default();
        let flat = vec![5.0; 20];
        part.species.push(Species {
            id: 0,
            representative: base(0),
            members: vec![0],
            best_history: flat.clone(),
        });
        part.species.push(Species {
            id: 1,
            representative: base(1),
            members: vec![1],
            best_history: flat,
        });
        let fit: BTreeMap<_, _> = [(0, 1.0), (1, 5.0)].into();
        let kept = remove_stagnant(&part, &fit, &NeatParams::default());
        assert_eq!(kept.species.len(), 1);
        assert_eq!(kept.species[0].id, 1);
    }
}
