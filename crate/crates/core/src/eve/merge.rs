use std::collections::btree_map::Entry;
use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::gene::{
    decode_gene, ConnectionGene, EncodedGene, Gene, Genome, GenomeId, NodeGene, NodeId,
};

/// Where a gene leaving a PE came from. The merge unit only needs this to
/// tell a latched connection (which may be rejected) from everything else.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin {
    Inherited,
    Split,
    Candidate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamGene {
    pub word: EncodedGene,
    pub origin: Origin,
}

impl StreamGene {
    pub fn inherited(word: EncodedGene) -> Self {
        StreamGene {
            word,
            origin: Origin::Inherited,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MergeReport {
    pub duplicates_dropped: u32,
    pub cycles_dropped: u32,
    pub candidates_kept: u32,
}

fn reaches(succ: &BTreeMap<NodeId, Vec<NodeId>>, from: NodeId, target: NodeId) -> bool {
    let mut seen = BTreeSet::new();
    let mut stack = vec![from];
    while let Some(n) = stack.pop() {
        if n == target {
            return true;
        }
        if seen.insert(n) {
            if let Some(next) = succ.get(&n) {
                stack.extend(next);
            }
        }
    }
    false
}

/// Reassembles one child from a PE's output stream: late genes go to their
/// sorted slot, the first gene of a key wins, and latched connections that
/// would close a cycle are dropped.
pub fn merge_stream(
    genes: &[StreamGene],
    child_id: GenomeId,
    num_inputs: u16,
    num_outputs: u16,
) -> Result<(Genome, MergeReport)> {
    let mut report = MergeReport::default();
    let mut nodes: BTreeMap<NodeId, NodeGene> = BTreeMap::new();
    let mut connections: BTreeMap<(NodeId, NodeId), ConnectionGene> = BTreeMap::new();
    let mut candidates: Vec<ConnectionGene> = Vec::new();

    for g in genes {
        match (decode_gene(g.word)?, g.origin) {
            (Gene::Node(n), _) => {
                if let Entry::Vacant(e) = nodes.entry(n.id) {
                    e.insert(n);
                } else {
                    report.duplicates_dropped += 1;
                }
            }
            (Gene::Connection(c), Origin::Candidate) => candidates.push(c),
            (Gene::Connection(c), _) => {
                if let Entry::Vacant(e) = connections.entry(c.key()) {
                    e.insert(c);
                } else {
                    report.duplicates_dropped += 1;
                }
            }
        }
    }

    for c in candidates {
        if connections.contains_key(&c.key()) {
            report.duplicates_dropped += 1;
            continue;
        }
        let mut succ: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
        for k in connections.keys() {
            succ.entry(k.0).or_default().push(k.1);
        }
        if c.src == c.dst || reaches(&succ, c.dst, c.src) {
            report.cycles_dropped += 1;
            continue;
        }
        connections.insert(c.key(), c);
        report.candidates_kept += 1;
    }

    for id in 0..num_inputs + num_outputs {
        if !nodes.contains_key(&id) {
            return Err(Error::InvalidGenome {
                genome_id: child_id,
                reason: format!("missing input/output node {id}"),
            });
        }
    }
    connections.retain(|k, _| nodes.contains_key(&k.0) && nodes.contains_key(&k.1));

    let genome = Genome {
        genome_id: child_id,
        nodes: nodes.into_values().collect(),
        connections: connections.into_values().collect(),
        num_inputs,
        num_outputs,
        fitness: None,
    };
    Ok((genome, report))
}
