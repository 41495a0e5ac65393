use rand::rngs::StdRng;
use rand::Rng;

use evosim::gene::{
    canonicalize, quantize_half, Activation, Aggregation, ConnectionGene, Genome, GenomeId,
    NodeGene,
};

pub const ACTIVATIONS: [Activation; 4] = [
    Activation::Identity,
    Activation::Sigmoid,
    Activation::Tanh,
    Activation::Relu,
];
pub const AGGREGATIONS: [Aggregation; 5] = [
    Aggregation::Sum,
    Aggregation::Product,
    Aggregation::Max,
    Aggregation::Min,
    Aggregation::Mean,
];

/// Random acyclic canonical genome with sparse hidden ids.
pub fn random_genome(rng: &mut StdRng, genome_id: GenomeId, ni: u16, no: u16) -> Genome {
    let hidden: u16 = rng.gen_range(0..=6);
    let mut order: Vec<u16> = (ni..ni + no)
        .chain((0..hidden).map(|h| ni + no + 2 * h + 1))
        .collect();
    for i in (1..order.len()).rev() {
        order.swap(i, rng.gen_range(0..=i));
    }
    let mut node = |id| NodeGene {
        id,
        bias: quantize_half(rng.gen_range(-2.0..2.0)),
        response: quantize_half(rng.gen_range(-2.0..2.0)),
        activation: ACTIVATIONS[rng.gen_range(0..4)],
        aggregation: AGGREGATIONS[rng.gen_range(0..5)],
    };
    let sources: Vec<u16> = (0..ni).chain(order.iter().copied()).collect();
    let nodes: Vec<NodeGene> = sources.iter().map(|&id| node(id)).collect();
    let density = rng.gen_range(0.2..0.8);
    let mut connections = Vec::new();
    for (j, &dst) in order.iter().enumerate() {
        for &src in &sources[..ni as usize + j] {
            if rng.gen_bool(density) {
                connections.push(ConnectionGene {
                    src,
                    dst,
                    weight: rng.gen_range(-3.0f32..3.0),
                    enabled: rng.gen_bool(0.85),
                });
            }
        }
    }
    canonicalize(Genome {
        genome_id,
        nodes,
        connections,
        num_inputs: ni,
        num_outputs: no,
        fitness: None,
    })
    .expect("generated genome is acyclic")
}
