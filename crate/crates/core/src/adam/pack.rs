use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::level::LevelPlan;
use crate::error::{Error, Result};
use crate::gene::NodeId;

/// A frontier posed as one dense matrix-vector product.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PackedMvm {
    /// Node computed by each matrix row.
    pub rows: Vec<NodeId>,
    /// Source node feeding each column, ascending.
    pub cols: Vec<NodeId>,
    /// Row-major `rows.len() x cols.len()` weights; absent edges are zero.
    pub matrix: Vec<f64>,
    pub vector: Vec<f64>,
    /// Enabled connections folded into the matrix.
    pub edges: u64,
}

impl PackedMvm {
    pub fn shape(&self) -> (usize, usize) {
        (self.rows.len(), self.cols.len())
    }
}

/// Matrix layout for `nodes`, with an empty vector.
pub fn pack_layout(nodes: &[NodeId], plan: &LevelPlan) -> PackedMvm {
    let empty = Vec::new();
    let fan_in = |id: &NodeId| plan.fan_in.get(id).unwrap_or(&empty);
    let cols: Vec<NodeId> = nodes
        .iter()
        .flat_map(|id| fan_in(id).iter().map(|&(src, _)| src))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let col_of: BTreeMap<NodeId, usize> = cols.iter().enumerate().map(|(i, &c)| (c, i)).collect();
    let k = cols.len();
    let mut matrix = vec![0.0; nodes.len() * k];
    let mut edges = 0;
    for (r, id) in nodes.iter().enumerate() {
        for &(src, w) in fan_in(id) {
            matrix[r * k + col_of[&src]] = w as f64;
            edges += 1;
        }
    }
    PackedMvm {
        rows: nodes.to_vec(),
        cols,
        matrix,
        vector: Vec::new(),
        edges,
    }
}

/// Gathers the source activations of `nodes` into a packed product.
pub fn pack_frontier(
    nodes: &[NodeId],
    plan: &LevelPlan,
    activations: &BTreeMap<NodeId, f64>,
) -> Result<PackedMvm> {
    let mut p = pack_layout(nodes, plan);
    p.vector = p
        .cols
        .iter()
        .map(|c| {
            activations
                .get(c)
                .copied()
                .ok_or(Error::MissingActivation(*c))
        })
        .collect::<Result<_>>()?;
    Ok(p)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MvmResult {
    pub values: Vec<f64>,
    pub cycles: u64,
    /// Multiply-accumulates on real edges.
    pub mac_count: u64,
    /// Multiply-accumulates the dense array performs, zero padding included.
    pub dense_macs: u64,
}

/// Cycles for an `m x k` product: each `rows x cols` tile takes `rows + cols` cycles.
pub fn tile_cycles(m: usize, k: usize, rows: usize, cols: usize) -> u64 {
    (m.div_ceil(rows) * k.div_ceil(cols) * (rows + cols)) as u64
}

/// Matrix-vector product on a `rows x cols` array. Each row accumulates in
/// ascending column order so results are reproducible bit for bit.
pub fn systolic_mvm(p: &PackedMvm, rows: usize, cols: usize) -> Result<MvmResult> {
    let (m, k) = p.shape();
    if rows == 0 || cols == 0 {
        return Err(Error::DimensionMismatch(format!("array {rows}x{cols}")));
    }
    if p.matrix.len() != m * k || p.vector.len() != k {
        return Err(Error::DimensionMismatch(format!(
            "matrix has {} entries for {m}x{k}, vector has {}",
            p.matrix.len(),
            p.vector.len()
        )));
    }
    let values = (0..m)
        .map(|r| {
            p.matrix[r * k..(r + 1) * k]
                .iter()
                .zip(&p.vector)
                .fold(0.0, |acc, (w, x)| acc + w * x)
        })
        .collect();
    Ok(MvmResult {
        values,
        cycles: tile_cycles(m, k, rows, cols),
        mac_count: p.edges,
        dense_macs: (m * k) as u64,
    })
}
