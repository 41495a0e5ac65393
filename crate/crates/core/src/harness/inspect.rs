use std::fmt::Write as _;
use std::path::Path;

use crate::adam::levelize;
use crate::error::Result;
use crate::gene::Genome;
use crate::population::{deserialize_population, footprint_bytes};

fn describe_genome(out: &mut String, g: &Genome) {
    let fitness = g.fitness.map_or_else(|| "-".to_string(), |f| f.to_string());
    let _ = writeln!(
        out,
        "genome {}: {} inputs, {} outputs, {} nodes, {} connections, fitness {}",
        g.genome_id,
        g.num_inputs,
        g.num_outputs,
        g.nodes.len(),
        g.connections.len(),
        fitness
    );
    match g.validate().and_then(|_| levelize(g)) {
        Ok(plan) => {
            let _ = writeln!(out, "  valid, depth {}", plan.depth());
        }
        Err(e) => {
            let _ = writeln!(out, "  invalid: {e}");
        }
    }
    for n in &g.nodes {
        let _ = writeln!(
            out,
            "  node {:>5}  bias {:>9}  response {:>9}  {:?} {:?}",
            n.id, n.bias, n.response, n.activation, n.aggregation
        );
    }
    for c in &g.connections {
        let _ = writeln!(
            out,
            "  conn {:>5} -> {:<5} weight {:>12}  {}",
            c.src,
            c.dst,
            c.weight,
            if c.enabled { "enabled" } else { "disabled" }
        );
    }
}

/// Human-readable dump of a population file.
pub fn inspect_bytes(bytes: &[u8]) -> Result<String> {
    let pop = deserialize_population(bytes)?;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{} genomes, {} genes, footprint {} bytes",
        pop.len(),
        pop.total_genes(),
        footprint_bytes(&pop)
    );
    for g in &pop.genomes {
        describe_genome(&mut out, g);
    }
    Ok(out)
}

pub fn inspect(path: &Path) -> Result<String> {
    inspect_bytes(&std::fs::read(path)?)
}
