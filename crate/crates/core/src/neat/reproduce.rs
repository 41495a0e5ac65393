//! Whole-genome reproduction.
//!
//! This is the oracle the streaming engine is checked against. It works
//! phase by phase over complete gene lists, while the streaming engine works
//! gene by gene through a pipeline; both must agree exactly. Each phase draws
//! from its own stream (see [`ChildStreams`]), so the two evaluation orders
//! see the same numbers.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::NeatParams;
use crate::error::{Error, Result};
use crate::gene::{
    canonicalize, quantize_half, quantize_weight, ConnectionGene, Genome, GenomeId, NodeGene,
    NodeId, MAX_NODE_ID,
};
use crate::prng::{seed_stream, UnitSource, XorWowState};

/// Mutated real attributes are clamped to `±ATTRIBUTE_LIMIT`.
pub const ATTRIBUTE_LIMIT: f64 = 30.0;
/// Replacement values are drawn uniformly from `[-REPLACE_RANGE, REPLACE_RANGE)`.
pub const REPLACE_RANGE: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum Stage {
    Crossover = 0,
    Perturb = 1,
    Delete = 2,
    AddNode = 3,
    AddConnection = 4,
}

/// One random stream per pipeline stage for a single child.
/// Stream ids are `child_id << 3 | stage`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChildStreams<R = XorWowState> {
    streams: [R; 5],
}

impl ChildStreams<XorWowState> {
    pub fn new(seed: u64, child_id: GenomeId) -> Self {
        let base = (child_id as u64) << 3;
        ChildStreams {
            streams: std::array::from_fn(|s| seed_stream(seed, base | s as u64)),
        }
    }
}

impl<R: UnitSource> ChildStreams<R> {
    /// Streams in [`Stage`] order.
    pub fn from_states(streams: [R; 5]) -> Self {
        ChildStreams { streams }
    }

    pub fn stage(&mut self, stage: Stage) -> &mut R {
        &mut self.streams[stage as usize]
    }

    pub fn states(&self) -> &[R; 5] {
        &self.streams
    }
}

/// Per-child operation counts, identical on both reproduction paths.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReproStats {
    /// Distinct gene keys across both parents.
    pub aligned_pairs: u64,
    /// Genes produced by crossover (matched or fitter-parent-only keys).
    pub crossovers: u64,
    pub perturbations: u64,
    pub replacements: u64,
    pub deleted_nodes: u64,
    pub deleted_connections: u64,
    /// Connections dropped because an endpoint was deleted.
    pub pruned_connections: u64,
    pub added_nodes: u64,
    /// Candidate connections emitted by the add stage.
    pub add_connection_attempts: u64,
    /// Candidates that survived the duplicate and cycle checks.
    pub added_connections: u64,
}

impl ReproStats {
    pub fn mutations(&self) -> u64 {
        self.perturbations
            + self.replacements
            + self.deleted_nodes
            + self.deleted_connections
            + self.added_nodes
            + self.added_connections
    }

    pub fn accumulate(&mut self, other: &ReproStats) {
        self.aligned_pairs += other.aligned_pairs;
        self.crossovers += other.crossovers;
        self.perturbations += other.perturbations;
        self.replacements += other.replacements;
        self.deleted_nodes += other.deleted_nodes;
        self.deleted_connections += other.deleted_connections;
        self.pruned_connections += other.pruned_connections;
        self.added_nodes += other.added_nodes;
        self.add_connection_attempts += other.add_connection_attempts;
        self.added_connections += other.added_connections;
    }
}

fn pick<T>(rng: &mut impl UnitSource, bias: f64, a: T, b: T) -> T {
    if rng.next_unit() < bias {
        a
    } else {
        b
    }
}

enum Mutated {
    Kept,
    Perturbed(f64),
    Replaced(f64),
}

fn mutate_value(x: f64, rng: &mut impl UnitSource, params: &NeatParams) -> Mutated {
    let u = rng.next_unit();
    if u < params.perturb_rate {
        let delta = (2.0 * rng.next_unit() - 1.0) * params.perturb_power;
        Mutated::Perturbed((x + delta).clamp(-ATTRIBUTE_LIMIT, ATTRIBUTE_LIMIT))
    } else if u < params.perturb_rate + params.replace_rate {
        Mutated::Replaced(-REPLACE_RANGE + 2.0 * REPLACE_RANGE * rng.next_unit())
    } else {
        Mutated::Kept
    }
}

fn mutate_attr(
    value: &mut f32,
    quantize: fn(f64) -> f32,
    rng: &mut impl UnitSource,
    params: &NeatParams,
    stats: &mut ReproStats,
) {
    match mutate_value(*value as f64, rng, params) {
        Mutated::Kept => {}
        Mutated::Perturbed(x) => {
            *value = quantize(x);
            stats.perturbations += 1;
        }
        Mutated::Replaced(x) => {
            *value = quantize(x);
            stats.replacements += 1;
        }
    }
}

/// True when `to` can already reach `from`, i.e. adding `from -> to` closes a cycle.
fn closes_cycle(connections: &[ConnectionGene], from: NodeId, to: NodeId) -> bool {
    if from == to {
        return true;
    }
    let mut succ: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
    for c in connections {
        succ.entry(c.src).or_default().push(c.dst);
    }
    let mut seen = BTreeSet::new();
    let mut stack = vec![to];
    while let Some(n) = stack.pop() {
        if n == from {
            return true;
        }
        if seen.insert(n) {
            stack.extend(succ.get(&n).into_iter().flatten().copied());
        }
    }
    false
}

/// Builds one child from its parents. `parent_a` must be the fitter parent.
pub fn reproduce_reference<R: UnitSource>(
    parent_a: &Genome,
    parent_b: &Genome,
    child_id: GenomeId,
    params: &NeatParams,
    rng: &mut ChildStreams<R>,
) -> Result<(Genome, ReproStats)> {
    for p in [parent_a, parent_b] {
        if !p.is_canonical() {
            return Err(Error::NonCanonical {
                genome_id: p.genome_id,
            });
        }
    }
    let mut stats = ReproStats::default();

    // crossover: matched keys mix attributes, unmatched keys come from A only
    let b_nodes: BTreeMap<NodeId, &NodeGene> = parent_b.nodes.iter().map(|n| (n.id, n)).collect();
    let b_conns: BTreeMap<(NodeId, NodeId), &ConnectionGene> =
        parent_b.connections.iter().map(|c| (c.key(), c)).collect();
    let a_node_ids: BTreeSet<NodeId> = parent_a.nodes.iter().map(|n| n.id).collect();
    let a_conn_keys: BTreeSet<(NodeId, NodeId)> =
        parent_a.connections.iter().map(|c| c.key()).collect();
    stats.aligned_pairs = (parent_a.gene_count()
        + b_nodes.keys().filter(|k| !a_node_ids.contains(k)).count()
        + b_conns.keys().filter(|k| !a_conn_keys.contains(k)).count())
        as u64;

    let bias = params.crossover_bias;
    let xo = rng.stage(Stage::Crossover);
    let mut nodes: Vec<NodeGene> = parent_a
        .nodes
        .iter()
        .map(|a| match b_nodes.get(&a.id) {
            Some(b) => NodeGene {
                id: a.id,
                bias: pick(xo, bias, a.bias, b.bias),
                response: pick(xo, bias, a.response, b.response),
                activation: pick(xo, bias, a.activation, b.activation),
                aggregation: pick(xo, bias, a.aggregation, b.aggregation),
            },
            None => *a,
        })
        .collect();
    let mut connections: Vec<ConnectionGene> = parent_a
        .connections
        .iter()
        .map(|a| match b_conns.get(&a.key()) {
            Some(b) => ConnectionGene {
                src: a.src,
                dst: a.dst,
                weight: pick(xo, bias, a.weight, b.weight),
                enabled: pick(xo, bias, a.enabled, b.enabled),
            },
            None => *a,
        })
        .collect();
    stats.crossovers = (nodes.len() + connections.len()) as u64;

    // perturbation
    let pt = rng.stage(Stage::Perturb);
    for n in &mut nodes {
        mutate_attr(&mut n.bias, quantize_half, pt, params, &mut stats);
        mutate_attr(&mut n.response, quantize_half, pt, params, &mut stats);
    }
    for c in &mut connections {
        mutate_attr(&mut c.weight, quantize_weight, pt, params, &mut stats);
    }

    // deletion
    let del = rng.stage(Stage::Delete);
    let mut deleted = BTreeSet::new();
    nodes.retain(|n| {
        if parent_a.is_io(n.id) {
            return true;
        }
        let hit = del.next_unit() < params.delete_node_prob;
        if hit && (deleted.len() as u32) < params.max_node_deletions {
            deleted.insert(n.id);
            false
        } else {
            true
        }
    });
    stats.deleted_nodes = deleted.len() as u64;
    connections.retain(|c| {
        if deleted.contains(&c.src) || deleted.contains(&c.dst) {
            stats.pruned_connections += 1;
            false
        } else if del.next_unit() < params.delete_conn_prob {
            stats.deleted_connections += 1;
            false
        } else {
            true
        }
    });

    // add node: split the first enabled connection whose draw hits
    let surviving = connections.clone();
    let max_id = nodes.iter().map(|n| n.id).max().unwrap_or(0);
    if max_id < MAX_NODE_ID {
        let an = rng.stage(Stage::AddNode);
        let split = surviving
            .iter()
            .position(|c| c.enabled && an.next_unit() < params.add_node_prob);
        if let Some(k) = split {
            let old = surviving[k];
            let m = max_id + 1;
            nodes.push(NodeGene::with_defaults(m, params.default_activation));
            connections.remove(k);
            connections.push(ConnectionGene::new(old.src, m, 1.0));
            connections.push(ConnectionGene::new(m, old.dst, old.weight));
            stats.added_nodes = 1;
        }
    }

    // add connection: source of the latched gene, destination of the next one
    let ac = rng.stage(Stage::AddConnection);
    let threshold = 1.0 - params.add_conn_prob;
    if let Some(i) = surviving.iter().position(|_| ac.next_unit() >= threshold) {
        if let Some(next) = surviving.get(i + 1) {
            stats.add_connection_attempts = 1;
            let (src, dst) = (surviving[i].src, next.dst);
            let duplicate = connections.iter().any(|c| c.key() == (src, dst));
            if !duplicate && !closes_cycle(&connections, src, dst) {
                connections.push(ConnectionGene::new(src, dst, 1.0));
                stats.added_connections = 1;
            }
        }
    }

    let child = canonicalize(Genome {
        genome_id: child_id,
        nodes,
        connections,
        num_inputs: parent_a.num_inputs,
        num_outputs: parent_a.num_outputs,
        fitness: None,
    })?;
    Ok((child, stats))
}
