use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::level::{levelize, LevelPlan};
use super::pack::{pack_layout, systolic_mvm, tile_cycles, PackedMvm};
use crate::error::{Error, Result};
use crate::gene::{Aggregation, Genome, NodeGene, NodeId};
use crate::interconnect::HwConfig;

/// Combines the weighted fan-in terms of one node. No inputs aggregate to 0.
pub fn aggregate(kind: Aggregation, terms: &[f64]) -> f64 {
    if terms.is_empty() {
        return 0.0;
    }
    match kind {
        Aggregation::Sum => terms.iter().fold(0.0, |a, t| a + t),
        Aggregation::Product => terms.iter().product(),
        Aggregation::Max => terms.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        Aggregation::Min => terms.iter().copied().fold(f64::INFINITY, f64::min),
        Aggregation::Mean => terms.iter().fold(0.0, |a, t| a + t) / terms.len() as f64,
    }
}

/// `activation(bias + response * aggregated)`.
pub fn apply_node(node: &NodeGene, aggregated: f64) -> f64 {
    node.activation
        .apply(node.bias as f64 + node.response as f64 * aggregated)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Frontier {
    packed: PackedMvm,
    /// Nodes whose aggregation cannot run as a multiply-accumulate.
    scalar: Vec<NodeId>,
}

/// A genome compiled for repeated inference: levelized once, with each
/// frontier's sum-aggregation nodes pre-packed into a weight matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    num_inputs: u16,
    outputs: Vec<NodeId>,
    nodes: BTreeMap<NodeId, NodeGene>,
    plan: LevelPlan,
    frontiers: Vec<Frontier>,
    rows: usize,
    cols: usize,
    cycles: u64,
    mac_count: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Inference {
    pub outputs: Vec<f64>,
    pub cycles: u64,
    pub mac_count: u64,
}

impl Network {
    pub fn compile(genome: &Genome, hw: &HwConfig) -> Result<Network> {
        if hw.systolic_rows == 0 || hw.systolic_cols == 0 {
            return Err(Error::DimensionMismatch(format!(
                "array {}x{}",
                hw.systolic_rows, hw.systolic_cols
            )));
        }
        let plan = levelize(genome)?;
        let nodes: BTreeMap<NodeId, NodeGene> = genome.nodes.iter().map(|n| (n.id, *n)).collect();
        let mut frontiers = Vec::with_capacity(plan.frontiers.len());
        let (mut cycles, mut mac_count) = (0, 0);
        for f in &plan.frontiers {
            let (summed, scalar): (Vec<NodeId>, Vec<NodeId>) = f
                .iter()
                .partition(|id| nodes[id].aggregation == Aggregation::Sum);
            let packed = pack_layout(&summed, &plan);
            let (m, k) = packed.shape();
            cycles += tile_cycles(m, k, hw.systolic_rows, hw.systolic_cols)
                + hw.vectorize_cycles_per_node * f.len() as u64;
            mac_count += packed.edges;
            frontiers.push(Frontier { packed, scalar });
        }
        Ok(Network {
            num_inputs: genome.num_inputs,
            outputs: genome.output_ids().collect(),
            nodes,
            plan,
            frontiers,
            rows: hw.systolic_rows,
            cols: hw.systolic_cols,
            cycles,
            mac_count,
        })
    }

    pub fn plan(&self) -> &LevelPlan {
        &self.plan
    }

    /// Cycles per inference; independent of the observation.
    pub fn cycles(&self) -> u64 {
        self.cycles
    }

    pub fn mac_count(&self) -> u64 {
        self.mac_count
    }

    pub fn activate(&self, observation: &[f64]) -> Result<Vec<f64>> {
        if observation.len() != self.num_inputs as usize {
            return Err(Error::DimensionMismatch(format!(
                "observation has {} values, network has {} inputs",
                observation.len(),
                self.num_inputs
            )));
        }
        let mut values: BTreeMap<NodeId, f64> = observation
            .iter()
            .enumerate()
            .map(|(i, &x)| (i as NodeId, x))
            .collect();
        for f in &self.frontiers {
            let lookup = |c: &NodeId| values.get(c).copied().ok_or(Error::MissingActivation(*c));
            let vector = f
                .packed
                .cols
                .iter()
                .map(lookup)
                .collect::<Result<Vec<_>>>()?;
            let packed = PackedMvm {
                vector,
                ..f.packed.clone()
            };
            let sums = systolic_mvm(&packed, self.rows, self.cols)?.values;
            let mut out = Vec::with_capacity(f.packed.rows.len() + f.scalar.len());
            for (id, sum) in f.packed.rows.iter().zip(sums) {
                out.push((*id, apply_node(&self.nodes[id], sum)));
            }
            for id in &f.scalar {
                let terms = self.plan.fan_in[id]
                    .iter()
                    .map(|&(src, w)| Ok(w as f64 * lookup(&src)?))
                    .collect::<Result<Vec<_>>>()?;
                let node = &self.nodes[id];
                out.push((*id, apply_node(node, aggregate(node.aggregation, &terms))));
            }
            values.extend(out);
        }
        self.outputs
            .iter()
            .map(|id| values.get(id).copied().ok_or(Error::MissingActivation(*id)))
            .collect()
    }

    pub fn infer(&self, observation: &[f64]) -> Result<Inference> {
        Ok(Inference {
            outputs: self.activate(observation)?,
            cycles: self.cycles,
            mac_count: self.mac_count,
        })
    }
}

/// One-shot inference; compile a [`Network`] instead when the genome is reused.
pub fn infer(genome: &Genome, observation: &[f64], hw: &HwConfig) -> Result<Inference> {
    Network::compile(genome, hw)?.infer(observation)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gene::{canonicalize, Activation, ConnectionGene};

    #[test]
    fn node_semantics() {
        let id = NodeGene::with_defaults(1, Activation::Identity);
        assert_eq!(apply_node(&id, 2.25), 2.25);
        assert_eq!(
            apply_node(&NodeGene::with_defaults(1, Activation::Sigmoid), 0.0),
            0.5
        );
        assert_eq!(
            apply_node(&NodeGene::with_defaults(1, Activation::Relu), -3.0),
            0.0
        );
        let n = NodeGene {
            bias: 1.0,
            response: 2.0,
            ..id
        };
        assert_eq!(apply_node(&n, 3.0), 7.0);
    }

    #[test]
    fn aggregations() {
        let t = [2.0, -1.0, 4.0];
        assert_eq!(aggregate(Aggregation::Sum, &t), 5.0);
        assert_eq!(aggregate(Aggregation::Product, &t), -8.0);
        assert_eq!(aggregate(Aggregation::Max, &t), 4.0);
        assert_eq!(aggregate(Aggregation::Min, &t), -1.0);
        assert!((aggregate(Aggregation::Mean, &t) - 5.0 / 3.0).abs() < 1e-15);
        for kind in Aggregation::ALL {
            assert_eq!(aggregate(kind, &[]), 0.0);
        }
    }

    #[test]
    fn pass_through() {
        let mut g = Genome::initial(1, 1, 1, Activation::Identity);
        g.connections[0].weight = 1.0;
        let r = infer(&g, &[0.7], &HwConfig::default()).unwrap();
        assert_eq!(r.outputs, vec![0.7]);
        assert_eq!(r.mac_count, 1);
        assert_eq!(r.cycles, 64);
    }

    #[test]
    fn zero_weights_give_half() {
        let g = Genome::initial(1, 4, 3, Activation::Sigmoid);
        let r = infer(&g, &[1.0, -2.0, 3.0, 0.5], &HwConfig::default()).unwrap();
        assert_eq!(r.outputs, vec![0.5; 3]);
        assert_eq!(r.mac_count, 12);
    }

    #[test]
    fn wrong_observation_length() {
        let g = Genome::initial(1, 2, 1, Activation::Sigmoid);
        assert!(matches!(
            infer(&g, &[1.0], &HwConfig::default()),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn hidden_layer_and_scalar_path() {
        // 0,1 inputs; 2 output; 3 max-aggregating hidden; 4 product-aggregating hidden
        let mut g = Genome::initial(1, 2, 1, Activation::Identity);
        g.connections.clear();
        g.nodes.push(NodeGene {
            aggregation: Aggregation::Max,
            ..NodeGene::with_defaults(3, Activation::Identity)
        });
        g.nodes.push(NodeGene {
            aggregation: Aggregation::Product,
            ..NodeGene::with_defaults(4, Activation::Identity)
        });
        for (s, d, w) in [
            (0, 3, 1.0),
            (1, 3, 2.0),
            (0, 4, 3.0),
            (1, 4, 1.0),
            (3, 2, 1.0),
            (4, 2, 0.5),
            (0, 2, 1.0),
        ] {
            g.connections.push(ConnectionGene::new(s, d, w));
        }
        let g = canonicalize(g).unwrap();
        let net = Network::compile(&g, &HwConfig::default()).unwrap();
        let out = net.activate(&[2.0, 5.0]).unwrap();
        // node 3 = max(2, 10) = 10; node 4 = 6 * 5 = 30; output = 2 + 10 + 15
        assert_eq!(out, vec![27.0]);
        // only sum-aggregating rows count toward array work
        assert_eq!(net.mac_count(), 3);
    }

    #[test]
    fn disabled_zero_edge_is_inert() {
        let mut g = Genome::initial(1, 2, 1, Activation::Tanh);
        g.connections[0].weight = 0.75;
        let hw = HwConfig::default();
        let before = infer(&g, &[0.3, -0.8], &hw).unwrap().outputs;
        g.connections[1].enabled = false;
        assert_eq!(infer(&g, &[0.3, -0.8], &hw).unwrap().outputs, before);
    }

    #[test]
    fn vectorize_cost_is_added_per_node() {
        let g = Genome::initial(1, 2, 2, Activation::Sigmoid);
        let hw = HwConfig {
            vectorize_cycles_per_node: 5,
            ..HwConfig::default()
        };
        assert_eq!(Network::compile(&g, &hw).unwrap().cycles(), 64 + 10);
    }
}
