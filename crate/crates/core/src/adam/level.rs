use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gene::{Genome, NodeId};

/// Non-input nodes grouped into frontiers; every source of a node sits in
/// an earlier frontier or is an input.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LevelPlan {
    pub frontiers: Vec<Vec<NodeId>>,
    /// Enabled incoming connections per node, sources ascending.
    pub fan_in: BTreeMap<NodeId, Vec<(NodeId, f32)>>,
}

impl LevelPlan {
    pub fn depth(&self) -> usize {
        self.frontiers.len()
    }

    pub fn level_of(&self, id: NodeId) -> Option<usize> {
        self.frontiers.iter().position(|f| f.contains(&id))
    }
}

/// Longest-path levelization over enabled connections. Connections into
/// inputs are ignored since inputs are always driven by the observation.
pub fn levelize(genome: &Genome) -> Result<LevelPlan> {
    let node_ids: BTreeSet<NodeId> = genome.nodes.iter().map(|n| n.id).collect();
    let mut fan_in: BTreeMap<NodeId, Vec<(NodeId, f32)>> = genome
        .nodes
        .iter()
        .filter(|n| !genome.is_input(n.id))
        .map(|n| (n.id, Vec::new()))
        .collect();
    let mut succ: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
    let mut pending: BTreeMap<NodeId, usize> = fan_in.keys().map(|&id| (id, 0)).collect();

    for c in genome.connections.iter().filter(|c| c.enabled) {
        if !node_ids.contains(&c.src) || !node_ids.contains(&c.dst) {
            return Err(Error::InvalidGenome {
                genome_id: genome.genome_id,
                reason: format!("connection {}->{} has a missing endpoint", c.src, c.dst),
            });
        }
        let Some(list) = fan_in.get_mut(&c.dst) else {
            continue;
        };
        list.push((c.src, c.weight));
        if !genome.is_input(c.src) {
            succ.entry(c.src).or_default().push(c.dst);
            *pending.get_mut(&c.dst).expect("non-input destination") += 1;
        }
    }
    for list in fan_in.values_mut() {
        list.sort_by_key(|&(src, _)| src);
    }

    let mut frontiers = Vec::new();
    let mut ready: Vec<NodeId> = pending
        .iter()
        .filter(|(_, &n)| n == 0)
        .map(|(&id, _)| id)
        .collect();
    let mut placed = 0;
    while !ready.is_empty() {
        let mut next = Vec::new();
        for id in &ready {
            for dst in succ.get(id).into_iter().flatten() {
                let n = pending.get_mut(dst).expect("non-input destination");
                *n -= 1;
                if *n == 0 {
                    next.push(*dst);
                }
            }
        }
        placed += ready.len();
        next.sort_unstable();
        frontiers.push(std::mem::replace(&mut ready, next));
    }
    if placed != fan_in.len() {
        return Err(Error::CyclicGenome(genome.genome_id));
    }
    Ok(LevelPlan { frontiers, fan_in })
}
