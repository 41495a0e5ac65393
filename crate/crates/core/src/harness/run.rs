use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ReproMode, RunConfig};
use crate::env::{evaluate_fitness, EnvKind, FitnessReport};
use crate::error::{Error, Result};
use crate::eve::{account_cycles, allocate_pes, EveReproducer};
use crate::gene::Genome;
use crate::interconnect::{account_energy, plan_fetch, NocMode};
use crate::neat::{
    step_generation, EvolutionState, MatingPlan, NeatParams, ReferenceReproducer, ReproStats,
    Reproducer,
};
use crate::population::{footprint_bytes, serialize_population, Population};
use crate::prng::derive_seed;

/// One row of the stats CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenRecord {
    pub generation: u32,
    pub best_fitness: f64,
    pub mean_fitness: f64,
    pub species_count: usize,
    pub total_genes: u64,
    pub crossovers: u64,
    pub mutations_perturb: u64,
    pub mutations_replace: u64,
    pub mutations_add_node: u64,
    pub mutations_add_conn: u64,
    pub mutations_delete_node: u64,
    pub mutations_delete_conn: u64,
    pub footprint_bytes: u64,
    pub sram_reads_p2p: u64,
    pub sram_reads_mcast: u64,
    pub dram_reads: u64,
    pub eve_cycles: u64,
    pub adam_cycles: u64,
    pub mac_count: u64,
    pub energy_total: f64,
    pub max_parent_reuse: u32,
}

impl GenRecord {
    pub const FIELDS: [&'static str; 21] = [
        "generation",
        "best_fitness",
        "mean_fitness",
        "species_count",
        "total_genes",
        "crossovers",
        "mutations_perturb",
        "mutations_replace",
        "mutations_add_node",
        "mutations_add_conn",
        "mutations_delete_node",
        "mutations_delete_conn",
        "footprint_bytes",
        "sram_reads_p2p",
        "sram_reads_mcast",
        "dram_reads",
        "eve_cycles",
        "adam_cycles",
        "mac_count",
        "energy_total",
        "max_parent_reuse",
    ];
}

pub fn stats_csv(records: &[GenRecord]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    if records.is_empty() {
        w.write_record(GenRecord::FIELDS)?;
    }
    for r in records {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub env: EnvKind,
    pub seed: u64,
    pub reproduction: ReproMode,
    pub generations: u32,
    pub converged: bool,
    /// First generation whose best genome reached the target.
    pub solved_generation: Option<u32>,
    pub target_fitness: f64,
    pub best_fitness: f64,
    pub best_genome_id: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub records: Vec<GenRecord>,
    pub summary: RunSummary,
    pub best_genome: Genome,
    /// Every evaluated population, one per generation.
    pub populations: Vec<Population>,
}

impl RunOutcome {
    pub fn converged(&self) -> bool {
        self.summary.converged
    }
}

/// Runs the configured reproduction path; in compare mode both paths run and
/// must agree child for child.
struct PathReproducer {
    mode: ReproMode,
    eve: EveReproducer,
    generation: u32,
}

fn describe_mismatch(reference: &[(Genome, ReproStats)], eve: &[(Genome, ReproStats)]) -> String {
    if reference.len() != eve.len() {
        return format!(
            "reference produced {} children, streaming produced {}",
            reference.len(),
            eve.len()
        );
    }
    for ((r, rs), (e, es)) in reference.iter().zip(eve) {
        if r != e {
            let first = r
                .encode()
                .ok()
                .zip(e.encode().ok())
                .and_then(|(a, b)| a.iter().zip(&b).position(|(x, y)| x != y));
            return format!(
                "child {}: reference {} nodes/{} connections, streaming {} nodes/{} connections, first differing gene index {:?}\nreference: {:?}\nstreaming: {:?}",
                r.genome_id,
                r.nodes.len(),
                r.connections.len(),
                e.nodes.len(),
                e.connections.len(),
                first,
                r,
                e
            );
        }
        if rs != es {
            return format!(
                "child {}: operation counts differ\nreference: {rs:?}\nstreaming: {es:?}",
                r.genome_id
            );
        }
    }
    "no difference found".into()
}

impl Reproducer for PathReproducer {
    fn reproduce(
        &mut self,
        parents: &Population,
        plan: &MatingPlan,
        params: &NeatParams,
        seed: u64,
    ) -> Result<Vec<(Genome, ReproStats)>> {
        match self.mode {
            ReproMode::Reference => ReferenceReproducer.reproduce(parents, plan, params, seed),
            ReproMode::Eve => self.eve.reproduce(parents, plan, params, seed),
            ReproMode::Both => {
                let reference = ReferenceReproducer.reproduce(parents, plan, params, seed)?;
                let eve = self.eve.reproduce(parents, plan, params, seed)?;
                if reference != eve {
                    return Err(Error::CompareMismatch {
                        generation: self.generation,
                        report: describe_mismatch(&reference, &eve),
                    });
                }
                Ok(eve)
            }
        }
    }
}

/// Fitness evaluation seed for a generation; every genome of the generation
/// sees the same episodes.
pub fn evaluation_seed(run_seed: u64, generation: u32) -> u64 {
    derive_seed(run_seed, 2 * generation as u64)
}

pub fn reproduction_seed(run_seed: u64, generation: u32) -> u64 {
    derive_seed(run_seed, 2 * generation as u64 + 1)
}

pub fn initial_population(config: &RunConfig) -> Population {
    let (inputs, outputs) = config.env.name.io_shape();
    let genomes = (0..config.run.population_size as u32)
        .map(|id| Genome::initial(id, inputs, outputs, config.neat.default_activation))
        .collect();
    Population::new(0, genomes)
}

/// Scores every genome in place. Genomes are evaluated concurrently and the
/// reports come back in population order.
pub fn evaluate_population(
    pop: &mut Population,
    config: &RunConfig,
    seed: u64,
) -> Result<Vec<FitnessReport>> {
    let reports: Vec<FitnessReport> = pop
        .genomes
        .par_iter()
        .map(|g| evaluate_fitness(g, config.env.name, config.env.episodes, seed, &config.hw))
        .collect::<Result<_>>()?;
    for (g, r) in pop.genomes.iter_mut().zip(&reports) {
        g.fitness = Some(r.fitness);
    }
    Ok(reports)
}

fn best_of(pop: &Population) -> &Genome {
    pop.genomes
        .iter()
        .max_by(|a, b| {
            let (fa, fb) = (
                a.fitness.unwrap_or(f64::NEG_INFINITY),
                b.fitness.unwrap_or(f64::NEG_INFINITY),
            );
            fa.total_cmp(&fb).then(b.genome_id.cmp(&a.genome_id))
        })
        .expect("population is not empty")
}

/// Evolves until the target is reached or the generation budget runs out,
/// writing stats, populations and a summary when an output directory is set.
pub fn run_evolve(config: &RunConfig) -> Result<RunOutcome> {
    config.validate()?;
    let hw = &config.hw;
    let target = config.target_fitness();
    let mut pop = initial_population(config);
    let mut state = EvolutionState::new(&pop);
    let mut reproducer = PathReproducer {
        mode: config.run.reproduction,
        eve: EveReproducer::new(hw.num_eve_pes),
        generation: 0,
    };
    let mut records = Vec::new();
    let mut populations = Vec::new();
    let mut solved_generation = None;

    for generation in 0..config.run.max_generations {
        let reports = evaluate_population(
            &mut pop,
            config,
            evaluation_seed(config.run.seed, generation),
        )?;
        let fitness: Vec<f64> = pop.genomes.iter().filter_map(|g| g.fitness).collect();
        let best_fitness = best_of(&pop).fitness.unwrap_or(f64::NEG_INFINITY);
        let mean_fitness = fitness.iter().sum::<f64>() / fitness.len() as f64;

        reproducer.generation = generation;
        let (next, gen_stats) = step_generation(
            &mut state,
            &pop,
            &config.neat,
            reproduction_seed(config.run.seed, generation),
            &mut reproducer,
        )?;

        let schedule = allocate_pes(&gen_stats.plan, hw.num_eve_pes)?;
        let cycles = account_cycles(&schedule, &gen_stats.plan, &pop, &gen_stats.per_child)?;
        let child_ids: BTreeSet<u32> = gen_stats.plan.matings.iter().map(|m| m.child_id).collect();
        let children: Vec<Genome> = next
            .genomes
            .iter()
            .filter(|g| child_ids.contains(&g.genome_id))
            .cloned()
            .collect();
        let p2p = plan_fetch(&schedule, &pop.genomes, &children, hw, NocMode::P2p)?;
        let mcast = plan_fetch(&schedule, &pop.genomes, &children, hw, NocMode::Multicast)?;
        let mem = match hw.noc_mode {
            NocMode::P2p => p2p,
            NocMode::Multicast => mcast,
        };
        let adam_cycles = reports.iter().map(|r| r.adam_cycles).sum();
        let mac_count = reports.iter().map(|r| r.mac_count).sum();
        let energy = account_energy(&cycles, &mem, mac_count, adam_cycles, hw)?;
        let t = &gen_stats.totals;
        records.push(GenRecord {
            generation,
            best_fitness,
            mean_fitness,
            species_count: gen_stats.species_count,
            total_genes: pop.total_genes() as u64,
            crossovers: t.crossovers,
            mutations_perturb: t.perturbations,
            mutations_replace: t.replacements,
            mutations_add_node: t.added_nodes,
            mutations_add_conn: t.added_connections,
            mutations_delete_node: t.deleted_nodes,
            mutations_delete_conn: t.deleted_connections,
            footprint_bytes: footprint_bytes(&pop),
            sram_reads_p2p: p2p.sram_reads,
            sram_reads_mcast: mcast.sram_reads,
            dram_reads: mem.dram_reads,
            eve_cycles: cycles.eve_cycles,
            adam_cycles,
            mac_count,
            energy_total: energy.total,
            max_parent_reuse: gen_stats.plan.max_parent_reuse(),
        });

        let reached = best_fitness >= target;
        if reached && solved_generation.is_none() {
            solved_generation = Some(generation);
        }
        populations.push(pop);
        if reached && config.run.stop_on_target {
            break;
        }
        pop = next;
    }

    let last = populations.last().expect("at least one generation ran");
    let best_genome = best_of(last).clone();
    let summary = RunSummary {
        env: config.env.name,
        seed: config.run.seed,
        reproduction: config.run.reproduction,
        generations: records.len() as u32,
        converged: solved_generation.is_some(),
        solved_generation,
        target_fitness: target,
        best_fitness: best_genome.fitness.unwrap_or(f64::NEG_INFINITY),
        best_genome_id: best_genome.genome_id,
    };
    let outcome = RunOutcome {
        records,
        summary,
        best_genome,
        populations,
    };
    if let Some(dir) = &config.run.output_dir {
        write_run(dir, config, &outcome)?;
    }
    Ok(outcome)
}

pub fn population_file_name(generation: u32) -> String {
    format!("gen_{generation:04}.pop")
}

fn write_run(dir: &Path, config: &RunConfig, outcome: &RunOutcome) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("stats.csv"), stats_csv(&outcome.records)?)?;
    fs::write(
        dir.join("summary.json"),
        serde_json::to_string_pretty(&outcome.summary)?,
    )?;
    fs::write(dir.join("config.json"), config.to_json()?)?;
    if config.run.write_populations {
        for pop in &outcome.populations {
            fs::write(
                dir.join(population_file_name(pop.generation_index)),
                serialize_population(pop)?,
            )?;
        }
    }
    Ok(())
}
