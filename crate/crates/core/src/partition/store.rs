use super::{MachineId, PartitionMap};
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::graph::{CscGraph, NodeId};

/// One machine's share of the topology: the complete in-neighbor lists of
/// the nodes it owns, over global source ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphPartition {
    pub machine_id: MachineId,
    /// Ascending.
    pub owned_nodes: Vec<NodeId>,
    /// Row `i` belongs to `owned_nodes[i]`.
    pub local_csc: CscGraph,
}

impl GraphPartition {
    pub fn local_row(&self, v: NodeId) -> Option<usize> {
        self.owned_nodes.binary_search(&v).ok()
    }

    pub fn owns(&self, v: NodeId) -> bool {
        self.local_row(v).is_some()
    }

    /// In-neighbors of an owned node.
    pub fn in_neighbors(&self, v: NodeId) -> Option<&[NodeId]> {
        self.local_row(v).map(|i| self.local_csc.row(i))
    }

    pub fn nnz(&self) -> usize {
        self.local_csc.nnz()
    }
}

pub fn build_graph_partition(
    g: &CscGraph,
    pmap: &PartitionMap,
    machine: MachineId,
) -> Result<GraphPartition> {
    if g.num_nodes() != pmap.num_nodes() {
        return Err(Error::Parameter(
            "partition map does not match graph size".into(),
        ));
    }
    if machine >= pmap.num_parts() {
        return Err(Error::Parameter(format!("machine {machine} out of range")));
    }
    let owned_nodes = pmap.owned_nodes(machine);
    let mut indptr = Vec::with_capacity(owned_nodes.len() + 1);
    indptr.push(0);
    let mut indices = Vec::new();
    for &v in &owned_nodes {
        indices.extend_from_slice(g.row(v as usize));
        indptr.push(indices.len());
    }
    let local_csc = CscGraph::bipartite(owned_nodes.len(), g.num_nodes(), indptr, indices)?;
    Ok(GraphPartition {
        machine_id: machine,
        owned_nodes,
        local_csc,
    })
}

/// One machine's feature rows, in owned-node order.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureShard {
    pub machine_id: MachineId,
    /// Ascending.
    pub owned_nodes: Vec<NodeId>,
    dim: usize,
    rows: Vec<f32>,
}

impl FeatureShard {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn local_index(&self, v: NodeId) -> Option<usize> {
        self.owned_nodes.binary_search(&v).ok()
    }

    /// Row of global node `v`, present iff this machine owns `v`.
    pub fn lookup(&self, v: NodeId) -> Option<&[f32]> {
        self.local_index(v)
            .map(|i| &self.rows[i * self.dim..(i + 1) * self.dim])
    }

    pub fn num_rows(&self) -> usize {
        self.owned_nodes.len()
    }

    pub fn to_matrix(&self) -> FeatureMatrix {
        FeatureMatrix::new(self.owned_nodes.len(), self.dim, self.rows.clone())
            .expect("shard shape is consistent")
    }
}

pub fn build_feature_shard(
    f: &FeatureMatrix,
    pmap: &PartitionMap,
    machine: MachineId,
) -> Result<FeatureShard> {
    if f.num_nodes() != pmap.num_nodes() {
        return Err(Error::Parameter(
            "partition map does not match feature rows".into(),
        ));
    }
    if machine >= pmap.num_parts() {
        return Err(Error::Parameter(format!("machine {machine} out of range")));
    }
    let owned_nodes = pmap.owned_nodes(machine);
    let rows = f.gather(&owned_nodes);
    Ok(FeatureShard {
        machine_id: machine,
        owned_nodes,
        dim: f.dim(),
        rows,
    })
}

/// Bytes needed for the CSC topology versus the feature matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StorageReport {
    pub topology_bytes: u128,
    pub feature_bytes: u128,
    pub topology_fraction: f64,
}

/// `topology = (n + 1 + nnz) * index_width`, `features = n * dim * elem`.
pub fn storage_report(
    num_nodes: u64,
    nnz: u64,
    feat_dim: u64,
    feat_bytes_per_elem: u64,
    index_width: u64,
) -> StorageReport {
    let topology_bytes = (num_nodes as u128 + 1 + nnz as u128) * index_width as u128;
    let feature_bytes = num_nodes as u128 * feat_dim as u128 * feat_bytes_per_elem as u128;
    let total = topology_bytes + feature_bytes;
    let topology_fraction = if total == 0 {
        1.0
    } else {
        topology_bytes as f64 / total as f64
    };
    StorageReport {
        topology_bytes,
        feature_bytes,
        topology_fraction,
    }
}

/// Dataset size parameters for storage estimates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DatasetConfig {
    pub name: &'static str,
    pub num_nodes: u64,
    pub num_edges: u64,
    pub feat_dim: u64,
}

pub const PRODUCTS: DatasetConfig = DatasetConfig {
    name: "ogbn-products",
    num_nodes: 2_500_000,
    num_edges: 124_000_000,
    feat_dim: 100,
};
pub const PAPERS100M: DatasetConfig = DatasetConfig {
    name: "ogbn-papers100M",
    num_nodes: 111_000_000,
    num_edges: 3_200_000_000,
    feat_dim: 128,
};
pub const DATASET_PRESETS: [DatasetConfig; 2] = [PRODUCTS, PAPERS100M];
