//! The four-stage PE pipeline: crossover, perturbation, deletion, addition.
//!
//! Every stage sees one gene at a time, in stream order, and keeps only the
//! small amount of state a hardware stage would latch.

use std::collections::BTreeSet;

use super::merge::{Origin, StreamGene};
use super::split::{AlignedPair, PairKind};
use crate::error::{Error, Result};
use crate::gene::{
    decode_gene, encode_gene, quantize_half, quantize_weight, ConnectionGene, EncodedGene, Gene,
    NodeGene, NodeId, MAX_NODE_ID,
};
use crate::neat::{ChildStreams, NeatParams, ReproStats, Stage, ATTRIBUTE_LIMIT, REPLACE_RANGE};
use crate::prng::{UnitSource, XorWowState};

/// Cycles spent loading parent fitness and control words before streaming.
pub const LOAD_CYCLES: u64 = 2;
/// Extra cycles to emit a split (one node plus two connections).
pub const ADD_NODE_CYCLES: u64 = 2;
/// Extra cycle to emit a latched connection.
pub const ADD_CONNECTION_CYCLES: u64 = 1;

/// Cycle cost of one child under the declared PE model.
pub fn child_cycles(stats: &ReproStats) -> u64 {
    LOAD_CYCLES
        + stats.aligned_pairs
        + ADD_NODE_CYCLES * stats.added_nodes
        + ADD_CONNECTION_CYCLES * stats.add_connection_attempts
}

#[derive(Debug, Clone)]
pub struct PeState<R = XorWowState> {
    pub params: NeatParams,
    /// Node ids below this bound are inputs or outputs.
    pub io_bound: NodeId,
    pub deleted_node_ids: BTreeSet<NodeId>,
    pub deletions_so_far: u32,
    pub max_node_id_seen: Option<NodeId>,
    pub pending_conn_src: Option<NodeId>,
    pub node_added: bool,
    pub connection_added: bool,
    pub rng: ChildStreams<R>,
    pub stats: ReproStats,
}

impl<R: UnitSource> PeState<R> {
    pub fn new(
        params: NeatParams,
        num_inputs: u16,
        num_outputs: u16,
        rng: ChildStreams<R>,
    ) -> Self {
        PeState {
            params,
            io_bound: num_inputs + num_outputs,
            deleted_node_ids: BTreeSet::new(),
            deletions_so_far: 0,
            max_node_id_seen: None,
            pending_conn_src: None,
            node_added: false,
            connection_added: false,
            rng,
            stats: ReproStats::default(),
        }
    }

    pub fn cycles(&self) -> u64 {
        child_cycles(&self.stats)
    }
}

fn select<T>(draw: f64, bias: f64, a: T, b: T) -> T {
    if draw < bias {
        a
    } else {
        b
    }
}

pub fn crossover_stage<R: UnitSource>(
    pair: &AlignedPair,
    pe: &mut PeState<R>,
) -> Result<Option<EncodedGene>> {
    pe.stats.aligned_pairs += 1;
    let word = match pair.kind() {
        PairKind::OnlyB => return Ok(None),
        PairKind::OnlyA => pair.from_a.expect("only-A pair carries an A word"),
        PairKind::Matched => {
            let (a, b) = (pair.from_a.unwrap(), pair.from_b.unwrap());
            let bias = pe.params.crossover_bias;
            let rng = pe.rng.stage(Stage::Crossover);
            let child = match (decode_gene(a)?, decode_gene(b)?) {
                (Gene::Node(a), Gene::Node(b)) => Gene::Node(NodeGene {
                    id: a.id,
                    bias: select(rng.next_unit(), bias, a.bias, b.bias),
                    response: select(rng.next_unit(), bias, a.response, b.response),
                    activation: select(rng.next_unit(), bias, a.activation, b.activation),
                    aggregation: select(rng.next_unit(), bias, a.aggregation, b.aggregation),
                }),
                (Gene::Connection(a), Gene::Connection(b)) => Gene::Connection(ConnectionGene {
                    src: a.src,
                    dst: a.dst,
                    weight: select(rng.next_unit(), bias, a.weight, b.weight),
                    enabled: select(rng.next_unit(), bias, a.enabled, b.enabled),
                }),
                _ => {
                    return Err(Error::MalformedGene {
                        word: a.0,
                        reason: "aligned genes differ in type".into(),
                    });
                }
            };
            encode_gene(&child)?
        }
    };
    pe.stats.crossovers += 1;
    Ok(Some(word))
}

/// Applies perturb-or-replace to one real attribute.
fn mutate<R: UnitSource>(value: f32, quantize: fn(f64) -> f32, pe: &mut PeState<R>) -> f32 {
    let p = &pe.params;
    let (rate, replace, power) = (p.perturb_rate, p.replace_rate, p.perturb_power);
    let rng = pe.rng.stage(Stage::Perturb);
    let u = rng.next_unit();
    if u < rate {
        pe.stats.perturbations += 1;
        let shifted = value as f64 + power * (2.0 * rng.next_unit() - 1.0);
        quantize(shifted.clamp(-ATTRIBUTE_LIMIT, ATTRIBUTE_LIMIT))
    } else if u < rate + replace {
        pe.stats.replacements += 1;
        quantize(REPLACE_RANGE * (2.0 * rng.next_unit() - 1.0))
    } else {
        value
    }
}

pub fn perturb_stage<R: UnitSource>(gene: EncodedGene, pe: &mut PeState<R>) -> Result<EncodedGene> {
    let out = match decode_gene(gene)? {
        Gene::Node(mut n) => {
            n.bias = mutate(n.bias, quantize_half, pe);
            n.response = mutate(n.response, quantize_half, pe);
            Gene::Node(n)
        }
        Gene::Connection(mut c) => {
            c.weight = mutate(c.weight, quantize_weight, pe);
            Gene::Connection(c)
        }
    };
    encode_gene(&out)
}

pub fn delete_stage<R: UnitSource>(
    gene: EncodedGene,
    pe: &mut PeState<R>,
) -> Result<Option<EncodedGene>> {
    match decode_gene(gene)? {
        Gene::Node(n) => {
            if n.id < pe.io_bound {
                return Ok(Some(gene));
            }
            let draw = pe.rng.stage(Stage::Delete).next_unit();
            if draw < pe.params.delete_node_prob
                && pe.deletions_so_far < pe.params.max_node_deletions
            {
                pe.deleted_node_ids.insert(n.id);
                pe.deletions_so_far += 1;
                pe.stats.deleted_nodes += 1;
                Ok(None)
            } else {
                Ok(Some(gene))
            }
        }
        Gene::Connection(c) => {
            if pe.deleted_node_ids.contains(&c.src) || pe.deleted_node_ids.contains(&c.dst) {
                pe.stats.pruned_connections += 1;
                return Ok(None);
            }
            if pe.rng.stage(Stage::Delete).next_unit() < pe.params.delete_conn_prob {
                pe.stats.deleted_connections += 1;
                Ok(None)
            } else {
                Ok(Some(gene))
            }
        }
    }
}

pub fn add_stage<R: UnitSource>(gene: EncodedGene, pe: &mut PeState<R>) -> Result<Vec<StreamGene>> {
    let c = match decode_gene(gene)? {
        Gene::Node(n) => {
            pe.max_node_id_seen = Some(pe.max_node_id_seen.map_or(n.id, |m| m.max(n.id)));
            return Ok(vec![StreamGene::inherited(gene)]);
        }
        Gene::Connection(c) => c,
    };
    let mut out = Vec::with_capacity(3);

    let max_id = pe.max_node_id_seen.unwrap_or(0);
    let split = !pe.node_added
        && c.enabled
        && max_id < MAX_NODE_ID
        && pe.rng.stage(Stage::AddNode).next_unit() < pe.params.add_node_prob;
    if split {
        let m = max_id + 1;
        let node = NodeGene::with_defaults(m, pe.params.default_activation);
        out.push(StreamGene {
            word: encode_gene(&Gene::Node(node))?,
            origin: Origin::Split,
        });
        out.push(StreamGene {
            word: encode_gene(&Gene::Connection(ConnectionGene::new(c.src, m, 1.0)))?,
            origin: Origin::Split,
        });
        out.push(StreamGene {
            word: encode_gene(&Gene::Connection(ConnectionGene::new(m, c.dst, c.weight)))?,
            origin: Origin::Split,
        });
        pe.node_added = true;
        pe.stats.added_nodes += 1;
    } else {
        out.push(StreamGene::inherited(gene));
    }

    // second cycle of a latched add: pair the stored source with this destination
    if let Some(src) = pe.pending_conn_src.take() {
        out.push(StreamGene {
            word: encode_gene(&Gene::Connection(ConnectionGene::new(src, c.dst, 1.0)))?,
            origin: Origin::Candidate,
        });
        pe.connection_added = true;
        pe.stats.add_connection_attempts += 1;
    } else if !pe.connection_added
        && pe.rng.stage(Stage::AddConnection).next_unit() >= 1.0 - pe.params.add_conn_prob
    {
        pe.pending_conn_src = Some(c.src);
    }
    Ok(out)
}

/// Streams every aligned pair through the four stages.
pub fn run_pe<R: UnitSource>(
    pairs: impl IntoIterator<Item = AlignedPair>,
    pe: &mut PeState<R>,
) -> Result<Vec<StreamGene>> {
    let mut out = Vec::new();
    for pair in pairs {
        let Some(gene) = crossover_stage(&pair, pe)? else {
            continue;
        };
        let gene = perturb_stage(gene, pe)?;
        let Some(gene) = delete_stage(gene, pe)? else {
            continue;
        };
        out.extend(add_stage(gene, pe)?);
    }
    // a latch still open at the end of the stream has no destination
    pe.pending_conn_src = None;
    Ok(out)
}
