//! Genes, genomes and the 64-bit gene word.
//!
//! Every gene travels through the evolution engine as one [`EncodedGene`].
//! Node words carry the node id and its four attributes; connection words
//! carry both endpoints, the weight and the enable bit:
//!
//! ```text
//! node:        63=0 | 62..48 id | 47..32 bias f16 | 31..16 response f16 | 15..12 act | 11..8 agg | 7..0 zero
//! connection:  63=1 | 62 enabled | 61..47 src | 46..32 dst | 31..0 weight f32
//! ```
//!
//! Real-valued attributes are quantized to their stored precision whenever
//! they are created or mutated, so the in-memory value always round-trips.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;

use half::f16;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type NodeId = u16;
pub type GenomeId = u32;

/// Largest node id that fits the 15-bit id fields.
pub const MAX_NODE_ID: NodeId = (1 << 15) - 1;

const TYPE_BIT: u64 = 1 << 63;
const ENABLED_BIT: u64 = 1 << 62;
const ID_MASK: u64 = 0x7fff;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
#[repr(u8)]
pub enum Activation {
    Identity = 0,
    Sigmoid = 1,
    Tanh = 2,
    Relu = 3,
}

impl Activation {
    pub const ALL: [Activation; 4] = [
        Activation::Identity,
        Activation::Sigmoid,
        Activation::Tanh,
        Activation::Relu,
    ];

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Result<Self> {
        Self::ALL
            .get(code as usize)
            .copied()
            .ok_or(Error::UnknownCode {
                kind: "activation",
                code,
            })
    }

    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Identity => z,
            Activation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
            Activation::Tanh => z.tanh(),
            Activation::Relu => z.max(0.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
#[repr(u8)]
pub enum Aggregation {
    Sum = 0,
    Product = 1,
    Max = 2,
    Min = 3,
    Mean = 4,
}

impl Aggregation {
    pub const ALL: [Aggregation; 5] = [
        Aggregation::Sum,
        Aggregation::Product,
        Aggregation::Max,
        Aggregation::Min,
        Aggregation::Mean,
    ];

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Result<Self> {
        Self::ALL
            .get(code as usize)
            .copied()
            .ok_or(Error::UnknownCode {
                kind: "aggregation",
                code,
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeGene {
    pub id: NodeId,
    pub bias: f32,
    pub response: f32,
    pub activation: Activation,
    pub aggregation: Aggregation,
}

impl NodeGene {
    /// Node with neutral attributes: bias 0, response 1, sum aggregation.
    pub fn with_defaults(id: NodeId, activation: Activation) -> Self {
        NodeGene {
            id,
            bias: 0.0,
            response: 1.0,
            activation,
            aggregation: Aggregation::Sum,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConnectionGene {
    pub src: NodeId,
    pub dst: NodeId,
    pub weight: f32,
    pub enabled: bool,
}

impl ConnectionGene {
    pub fn new(src: NodeId, dst: NodeId, weight: f32) -> Self {
        ConnectionGene {
            src,
            dst,
            weight,
            enabled: true,
        }
    }

    pub fn key(&self) -> (NodeId, NodeId) {
        (self.src, self.dst)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gene {
    Node(NodeGene),
    Connection(ConnectionGene),
}

impl Gene {
    pub fn key(&self) -> GeneKey {
        match self {
            Gene::Node(n) => GeneKey::Node(n.id),
            Gene::Connection(c) => GeneKey::Connection(c.src, c.dst),
        }
    }
}

impl From<NodeGene> for Gene {
    fn from(n: NodeGene) -> Self {
        Gene::Node(n)
    }
}

impl From<ConnectionGene> for Gene {
    fn from(c: ConnectionGene) -> Self {
        Gene::Connection(c)
    }
}

/// Alignment key of a gene. All node keys order before all connection keys.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GeneKey {
    Node(NodeId),
    Connection(NodeId, NodeId),
}

/// Round to the nearest binary16 value, returned widened to `f32`.
pub fn quantize_half(x: f64) -> f32 {
    f16::from_f64(x).to_f32()
}

/// Round to the nearest binary32 value.
pub fn quantize_weight(x: f64) -> f32 {
    x as f32
}

fn exact_half(x: f32) -> Option<u16> {
    if !x.is_finite() {
        return None;
    }
    let h = f16::from_f32(x);
    (h.to_f32().to_bits() == x.to_bits()).then(|| h.to_bits())
}

/// One gene packed into a 64-bit word.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct EncodedGene(pub u64);

impl fmt::Debug for EncodedGene {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "EncodedGene({:#018x})", self.0)
    }
}

impl EncodedGene {
    pub fn is_connection(self) -> bool {
        self.0 & TYPE_BIT != 0
    }

    /// Alignment key read straight from the id fields.
    pub fn key(self) -> GeneKey {
        if self.is_connection() {
            GeneKey::Connection(
                ((self.0 >> 47) & ID_MASK) as NodeId,
                ((self.0 >> 32) & ID_MASK) as NodeId,
            )
        } else {
            GeneKey::Node(((self.0 >> 48) & ID_MASK) as NodeId)
        }
    }
}

pub fn encode_gene(gene: &Gene) -> Result<EncodedGene> {
    match gene {
        Gene::Node(n) => {
            if n.id > MAX_NODE_ID {
                return Err(Error::EncodingRange(format!(
                    "node id {} exceeds 15 bits",
                    n.id
                )));
            }
            let bias = exact_half(n.bias).ok_or_else(|| {
                Error::EncodingRange(format!(
                    "bias {} of node {} is not a binary16 value",
                    n.bias, n.id
                ))
            })?;
            let response = exact_half(n.response).ok_or_else(|| {
                Error::EncodingRange(format!(
                    "response {} of node {} is not a binary16 value",
                    n.response, n.id
                ))
            })?;
            Ok(EncodedGene(
                (n.id as u64) << 48
                    | (bias as u64) << 32
                    | (response as u64) << 16
                    | (n.activation.code() as u64) << 12
                    | (n.aggregation.code() as u64) << 8,
            ))
        }
        Gene::Connection(c) => {
            if c.src > MAX_NODE_ID || c.dst > MAX_NODE_ID {
                return Err(Error::EncodingRange(format!(
                    "connection ({}, {}) endpoint exceeds 15 bits",
                    c.src, c.dst
                )));
            }
            if !c.weight.is_finite() {
                return Err(Error::EncodingRange(format!(
                    "weight {} of connection ({}, {}) is not finite",
                    c.weight, c.src, c.dst
                )));
            }
            let mut word =
                TYPE_BIT | (c.src as u64) << 47 | (c.dst as u64) << 32 | c.weight.to_bits() as u64;
            if c.enabled {
                word |= ENABLED_BIT;
            }
            Ok(EncodedGene(word))
        }
    }
}

pub fn decode_gene(word: EncodedGene) -> Result<Gene> {
    let w = word.0;
    let malformed = |reason: &str| Error::MalformedGene {
        word: w,
        reason: reason.to_string(),
    };
    if word.is_connection() {
        let weight = f32::from_bits(w as u32);
        if !weight.is_finite() {
            return Err(malformed("non-finite weight"));
        }
        Ok(Gene::Connection(ConnectionGene {
            src: ((w >> 47) & ID_MASK) as NodeId,
            dst: ((w >> 32) & ID_MASK) as NodeId,
            weight,
            enabled: w & ENABLED_BIT != 0,
        }))
    } else {
        if w & 0xff != 0 {
            return Err(malformed("reserved bits 7..0 are not zero"));
        }
        let bias = f16::from_bits((w >> 32) as u16);
        let response = f16::from_bits((w >> 16) as u16);
        if !bias.is_finite() || !response.is_finite() {
            return Err(malformed("non-finite node attribute"));
        }
        let activation = Activation::from_code(((w >> 12) & 0xf) as u8)
            .map_err(|_| malformed("undefined activation code"))?;
        let aggregation = Aggregation::from_code(((w >> 8) & 0xf) as u8)
            .map_err(|_| malformed("undefined aggregation code"))?;
        Ok(Gene::Node(NodeGene {
            id: ((w >> 48) & ID_MASK) as NodeId,
            bias: bias.to_f32(),
            response: response.to_f32(),
            activation,
            aggregation,
        }))
    }
}

/// One individual: a node cluster followed by a connection cluster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Genome {
    pub genome_id: GenomeId,
    pub nodes: Vec<NodeGene>,
    pub connections: Vec<ConnectionGene>,
    pub num_inputs: u16,
    pub num_outputs: u16,
    pub fitness: Option<f64>,
}

impl Genome {
    /// Inputs fully connected to outputs with zero weights.
    pub fn initial(
        genome_id: GenomeId,
        num_inputs: u16,
        num_outputs: u16,
        activation: Activation,
    ) -> Self {
        let io = num_inputs + num_outputs;
        let nodes = (0..io)
            .map(|id| NodeGene::with_defaults(id, activation))
            .collect();
        let connections = (0..num_inputs)
            .flat_map(|src| (num_inputs..io).map(move |dst| ConnectionGene::new(src, dst, 0.0)))
            .collect();
        Genome {
            genome_id,
            nodes,
            connections,
            num_inputs,
            num_outputs,
            fitness: None,
        }
    }

    pub fn is_input(&self, id: NodeId) -> bool {
        id < self.num_inputs
    }

    pub fn is_output(&self, id: NodeId) -> bool {
        id >= self.num_inputs && id < self.num_inputs + self.num_outputs
    }

    pub fn is_io(&self, id: NodeId) -> bool {
        id < self.num_inputs + self.num_outputs
    }

    pub fn output_ids(&self) -> std::ops::Range<NodeId> {
        self.num_inputs..self.num_inputs + self.num_outputs
    }

    pub fn gene_count(&self) -> usize {
        self.nodes.len() + self.connections.len()
    }

    pub fn node(&self, id: NodeId) -> Option<&NodeGene> {
        self.nodes
            .binary_search_by_key(&id, |n| n.id)
            .ok()
            .map(|i| &self.nodes[i])
    }

    pub fn max_node_id(&self) -> NodeId {
        self.nodes.iter().map(|n| n.id).max().unwrap_or(0)
    }

    pub fn is_canonical(&self) -> bool {
        self.nodes.windows(2).all(|w| w[0].id < w[1].id)
            && self.connections.windows(2).all(|w| w[0].key() < w[1].key())
    }

    /// Gene words in stream order: nodes first, then connections.
    pub fn encode(&self) -> Result<Vec<EncodedGene>> {
        self.nodes
            .iter()
            .map(|n| encode_gene(&Gene::Node(*n)))
            .chain(
                self.connections
                    .iter()
                    .map(|c| encode_gene(&Gene::Connection(*c))),
            )
            .collect()
    }

    /// Checks every structural invariant: order, unique keys, endpoints,
    /// id range and presence of the input/output nodes.
    pub fn validate(&self) -> Result<()> {
        let invalid = |reason: String| Error::InvalidGenome {
            genome_id: self.genome_id,
            reason,
        };
        if !self.is_canonical() {
            return Err(Error::NonCanonical {
                genome_id: self.genome_id,
            });
        }
        if let Some(n) = self.nodes.iter().find(|n| n.id > MAX_NODE_ID) {
            return Err(invalid(format!("node id {} exceeds 15 bits", n.id)));
        }
        for id in 0..self.num_inputs + self.num_outputs {
            if self.node(id).is_none() {
                return Err(invalid(format!("missing input/output node {id}")));
            }
        }
        for c in &self.connections {
            if self.node(c.src).is_none() || self.node(c.dst).is_none() {
                return Err(invalid(format!(
                    "dangling connection ({}, {})",
                    c.src, c.dst
                )));
            }
        }
        Ok(())
    }
}

fn sort_dedup_by_key<T, K: Ord + Copy>(items: &mut Vec<T>, key: impl Fn(&T) -> K) {
    // stable sort, so the first occurrence of a key stays first
    items.sort_by_key(|x| key(x));
    items.dedup_by(|b, a| key(a).cmp(&key(b)) == Ordering::Equal);
}

/// Sorts both clusters, collapses duplicate keys (first occurrence wins) and
/// drops connections whose endpoints are not in the node cluster.
pub fn canonicalize(mut genome: Genome) -> Result<Genome> {
    sort_dedup_by_key(&mut genome.nodes, |n| n.id);
    sort_dedup_by_key(&mut genome.connections, |c| c.key());
    let ids: BTreeSet<NodeId> = genome.nodes.iter().map(|n| n.id).collect();
    genome
        .connections
        .retain(|c| ids.contains(&c.src) && ids.contains(&c.dst));
    for id in 0..genome.num_inputs + genome.num_outputs {
        if !ids.contains(&id) {
            return Err(Error::InvalidGenome {
                genome_id: genome.genome_id,
                reason: format!("missing input/output node {id}"),
            });
        }
    }
    Ok(genome)
}
