use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::NodeId;

/// Dense row-major node features, one `f32` row of width `dim` per node.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    num_nodes: usize,
    dim: usize,
    data: Vec<f32>,
}

impl FeatureMatrix {
    pub fn new(num_nodes: usize, dim: usize, data: Vec<f32>) -> Result<Self> {
        if num_nodes.checked_mul(dim) != Some(data.len()) {
            return Err(Error::Malformed(format!(
                "feature payload has {} values, expected {num_nodes}x{dim}",
                data.len()
            )));
        }
        Ok(Self {
            num_nodes,
            dim,
            data,
        })
    }

    pub fn zeros(num_nodes: usize, dim: usize) -> Self {
        Self {
            num_nodes,
            dim,
            data: vec![0.0; num_nodes * dim],
        }
    }

    /// Uniform values in `[-1, 1)`, deterministic per seed.
    pub fn random(num_nodes: usize, dim: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..num_nodes * dim)
            .map(|_| rng.gen_range(-1.0f32..1.0))
            .collect();
        Self {
            num_nodes,
            dim,
            data,
        }
    }

    /// Row `v` filled by `f(v, column)`.
    pub fn from_fn(num_nodes: usize, dim: usize, f: impl Fn(NodeId, usize) -> f32) -> Self {
        let mut data = Vec::with_capacity(num_nodes * dim);
        for v in 0..num_nodes {
            data.extend((0..dim).map(|j| f(v as NodeId, j)));
        }
        Self {
            num_nodes,
            dim,
            data,
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    #[inline]
    pub fn row(&self, v: NodeId) -> &[f32] {
        let start = v as usize * self.dim;
        &self.data[start..start + self.dim]
    }

    /// Copies the rows of `nodes`, in order, into one row-major buffer.
    pub fn gather(&self, nodes: &[NodeId]) -> Vec<f32> {
        let mut out = Vec::with_capacity(nodes.len() * self.dim);
        for &v in nodes {
            out.extend_from_slice(self.row(v));
        }
        out
    }
}

/// The labeled (training) node subset, kept sorted and duplicate-free.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LabelSet {
    nodes: Vec<NodeId>,
}

impl LabelSet {
    /// Requires `nodes` strictly increasing and below `num_nodes`.
    pub fn new(nodes: Vec<NodeId>, num_nodes: usize) -> Result<Self> {
        if nodes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Malformed(
                "label set must be strictly increasing".into(),
            ));
        }
        if let Some(&v) = nodes.last() {
            if v as usize >= num_nodes {
                return Err(Error::Malformed(format!(
                    "label {v} out of range for {num_nodes} nodes"
                )));
            }
        }
        Ok(Self { nodes })
    }

    /// Sorts and deduplicates before validating.
    pub fn from_unsorted(mut nodes: Vec<NodeId>, num_nodes: usize) -> Result<Self> {
        nodes.sort_unstable();
        nodes.dedup();
        Self::new(nodes, num_nodes)
    }

    pub fn all(num_nodes: usize) -> Self {
        Self {
            nodes: (0..num_nodes as NodeId).collect(),
        }
    }

    /// Each node labeled independently with probability `fraction`.
    pub fn random(num_nodes: usize, fraction: f64, seed: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&fraction) {
            return Err(Error::Parameter(format!(
                "label fraction {fraction} outside [0, 1]"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let nodes = (0..num_nodes as NodeId)
            .filter(|_| rng.gen_bool(fraction))
            .collect();
        Ok(Self { nodes })
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn contains(&self, v: NodeId) -> bool {
        self.nodes.binary_search(&v).is_ok()
    }
}
