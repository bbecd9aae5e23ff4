//! Edge-cut partitioning: node-to-machine maps, per-machine topology and
//! feature stores, and storage accounting.

mod io;
mod store;

pub use io::{
    load_partition_map, read_partition_map_binary, read_partition_map_text, save_partition_map,
    write_partition_map_binary, write_partition_map_text, PARTITION_MAGIC,
};
pub use store::{
    build_feature_shard, build_graph_partition, storage_report, DatasetConfig, FeatureShard,
    GraphPartition, StorageReport, DATASET_PRESETS, PAPERS100M, PRODUCTS,
};

use crate::error::{Error, Result};
use crate::features::LabelSet;
use crate::graph::{transpose, CscGraph, NodeId};

pub type MachineId = u32;

pub const DEFAULT_SLACK: f64 = 0.05;

/// Owner machine of every node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionMap {
    assignment: Vec<MachineId>,
    num_parts: u32,
}

impl PartitionMap {
    pub fn new(assignment: Vec<MachineId>, num_parts: u32) -> Result<Self> {
        if num_parts == 0 {
            return Err(Error::Parameter("machine count must be at least 1".into()));
        }
        if let Some((v, &m)) = assignment.iter().enumerate().find(|(_, &m)| m >= num_parts) {
            return Err(Error::Malformed(format!(
                "node {v} assigned to machine {m} of {num_parts}"
            )));
        }
        Ok(Self {
            assignment,
            num_parts,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.assignment.len()
    }

    pub fn num_parts(&self) -> u32 {
        self.num_parts
    }

    pub fn assignment(&self) -> &[MachineId] {
        &self.assignment
    }

    #[inline]
    pub fn owner(&self, v: NodeId) -> MachineId {
        self.assignment[v as usize]
    }

    /// Nodes owned by `machine`, ascending.
    pub fn owned_nodes(&self, machine: MachineId) -> Vec<NodeId> {
        (0..self.assignment.len() as NodeId)
            .filter(|&v| self.owner(v) == machine)
            .collect()
    }

    pub fn node_counts(&self) -> Vec<usize> {
        let mut c = vec![0; self.num_parts as usize];
        for &m in &self.assignment {
            c[m as usize] += 1;
        }
        c
    }

    pub fn label_counts(&self, labels: &LabelSet) -> Vec<usize> {
        let mut c = vec![0; self.num_parts as usize];
        for &v in labels.nodes() {
            c[self.owner(v) as usize] += 1;
        }
        c
    }

    /// Labeled nodes owned by `machine`.
    pub fn local_labels(&self, labels: &LabelSet, machine: MachineId) -> LabelSet {
        let nodes = labels
            .nodes()
            .iter()
            .copied()
            .filter(|&v| self.owner(v) == machine)
            .collect();
        LabelSet::new(nodes, self.assignment.len()).expect("subset of a valid label set")
    }
}

/// `v mod P`.
pub fn partition_hash(num_nodes: usize, num_parts: u32) -> Result<PartitionMap> {
    if num_parts == 0 {
        return Err(Error::Parameter("machine count must be at least 1".into()));
    }
    PartitionMap::new(
        (0..num_nodes)
            .map(|v| (v % num_parts as usize) as MachineId)
            .collect(),
        num_parts,
    )
}

fn capacity(total: usize, parts: u32, slack: f64) -> usize {
    let even = total.div_ceil(parts as usize);
    ((1.0 + slack) * even as f64 + 1e-9).floor() as usize
}

/// Streaming linear greedy partitioner with hard node and labeled-node
/// capacities of `(1 + slack) * ceil(count / P)` per machine.
///
/// Nodes are placed in ascending id order. Each goes to the machine holding
/// most of its already-placed neighbors (both edge directions), ties broken
/// by lower node load, then lower machine id. A machine is eligible only if
/// it has room and placing the node there still leaves enough joint node and
/// label capacity for every node not yet placed, so the stream never stalls.
pub fn partition_greedy(
    g: &CscGraph,
    num_parts: u32,
    labels: &LabelSet,
    capacity_slack: f64,
) -> Result<PartitionMap> {
    if num_parts == 0 {
        return Err(Error::Parameter("machine count must be at least 1".into()));
    }
    if !(capacity_slack.is_finite() && capacity_slack >= 0.0) {
        return Err(Error::Parameter(format!(
            "capacity slack {capacity_slack} must be a nonnegative number"
        )));
    }
    let n = g.num_nodes();
    let p = num_parts as usize;
    let node_cap = capacity(n, num_parts, capacity_slack);
    let label_cap = capacity(labels.len(), num_parts, capacity_slack);
    if node_cap * p < n || node_cap.min(label_cap) * p < labels.len() {
        return Err(Error::Parameter(format!(
            "slack {capacity_slack} leaves too little capacity for {n} nodes / {} labels on {p} machines",
            labels.len()
        )));
    }

    let out = transpose(g);
    let mut assignment = vec![MachineId::MAX; n];
    let mut node_room = vec![node_cap; p];
    let mut label_room = vec![label_cap; p];
    let mut sum_room: usize = node_cap * p;
    let mut sum_joint: usize = node_cap.min(label_cap) * p;
    let mut labels_left = labels.len();
    let mut label_iter = labels.nodes().iter().peekable();
    let mut hits = vec![0usize; p];
    let mut touched: Vec<usize> = Vec::new();

    for v in 0..n {
        let labeled = label_iter.next_if_eq(&&(v as NodeId)).is_some();
        if labeled {
            labels_left -= 1;
        }
        let nodes_left = n - v - 1;
        for &u in g.row(v).iter().chain(out.row(v)) {
            let m = assignment[u as usize];
            if m != MachineId::MAX {
                if hits[m as usize] == 0 {
                    touched.push(m as usize);
                }
                hits[m as usize] += 1;
            }
        }

        let mut best: Option<usize> = None;
        for m in 0..p {
            if node_room[m] == 0 || (labeled && label_room[m] == 0) {
                continue;
            }
            let nr = node_room[m] - 1;
            let lr = label_room[m] - labeled as usize;
            let joint = sum_joint - node_room[m].min(label_room[m]) + nr.min(lr);
            if sum_room - 1 < nodes_left || joint < labels_left {
                continue;
            }
            best = match best {
                None => Some(m),
                Some(b) => {
                    let load = |x: usize| node_cap - node_room[x];
                    if (hits[m], std::cmp::Reverse(load(m))) > (hits[b], std::cmp::Reverse(load(b)))
                    {
                        Some(m)
                    } else {
                        Some(b)
                    }
                }
            };
        }
        let m =
            best.ok_or_else(|| Error::Parameter(format!("no feasible machine for node {v}")))?;
        sum_joint = sum_joint - node_room[m].min(label_room[m])
            + (node_room[m] - 1).min(label_room[m] - labeled as usize);
        sum_room -= 1;
        node_room[m] -= 1;
        label_room[m] -= labeled as usize;
        assignment[v] = m as MachineId;
        for t in touched.drain(..) {
            hits[t] = 0;
        }
    }
    PartitionMap::new(assignment, num_parts)
}

/// Number of edges whose endpoints live on different machines.
pub fn edge_cut(g: &CscGraph, pmap: &PartitionMap) -> Result<u64> {
    if g.num_nodes() != pmap.num_nodes() {
        return Err(Error::Parameter(format!(
            "graph has {} nodes but partition map covers {}",
            g.num_nodes(),
            pmap.num_nodes()
        )));
    }
    let mut cut = 0u64;
    for v in 0..g.num_nodes() {
        let mv = pmap.owner(v as NodeId);
        cut += g.row(v).iter().filter(|&&u| pmap.owner(u) != mv).count() as u64;
    }
    Ok(cut)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{generate_erdos_renyi, generate_rmat, generate_two_cliques, RmatProbs};
    use crate::graph::build_csc;
    use crate::graph::fixtures::{g1, g1_coo};
    use proptest::prelude::*;

    #[test]
    fn hash_map() {
        assert_eq!(partition_hash(5, 2).unwrap().assignment(), &[0, 1, 0, 1, 0]);
        assert!(partition_hash(4, 1)
            .unwrap()
            .assignment()
            .iter()
            .all(|&m| m == 0));
        let counts = partition_hash(103, 7).unwrap().node_counts();
        assert!(counts.iter().max().unwrap() - counts.iter().min().unwrap() <= 1);
        assert!(partition_hash(3, 0).is_err());
    }

    #[test]
    fn map_validation() {
        assert!(PartitionMap::new(vec![0, 2], 2).is_err());
        assert!(PartitionMap::new(vec![], 0).is_err());
    }

    #[test]
    fn edge_cut_g1() {
        let pmap = PartitionMap::new(vec![0, 0, 0, 1, 1], 2).unwrap();
        assert_eq!(edge_cut(&g1(), &pmap).unwrap(), 3);
        let brute = g1_coo()
            .edges()
            .filter(|&(s, d)| pmap.owner(s) != pmap.owner(d))
            .count();
        assert_eq!(brute, 3);
        assert_eq!(edge_cut(&g1(), &partition_hash(5, 1).unwrap()).unwrap(), 0);
        assert!(edge_cut(&g1(), &partition_hash(4, 1).unwrap()).is_err());
    }

    #[test]
    fn greedy_single_machine() {
        let g = g1();
        let p = partition_greedy(&g, 1, &LabelSet::all(5), 0.0).unwrap();
        assert!(p.assignment().iter().all(|&m| m == 0));
        assert_eq!(edge_cut(&g, &p).unwrap(), 0);
    }

    #[test]
    fn greedy_separates_two_cliques() {
        let g = build_csc(&generate_two_cliques(10), false).unwrap();
        for labels in [LabelSet::default(), LabelSet::all(20)] {
            let p = partition_greedy(&g, 2, &labels, 0.05).unwrap();
            assert_eq!(edge_cut(&g, &p).unwrap(), 0);
            // exhaustive check: every edge stays inside one machine
            for v in 0..20u64 {
                assert!(g.row(v as usize).iter().all(|&u| p.owner(u) == p.owner(v)));
            }
        }
        let hash = partition_hash(20, 2).unwrap();
        assert!(edge_cut(&g, &hash).unwrap() > 0);
    }

    #[test]
    fn greedy_does_not_stall_on_tight_labels() {
        // Unlabeled nodes 0 and 1 would both prefer machine 0, which must
        // keep room for the labeled tail.
        let coo = crate::graph::CooGraph::new(4, vec![1, 0], vec![0, 1]).unwrap();
        let g = build_csc(&coo, false).unwrap();
        let labels = LabelSet::new(vec![2, 3], 4).unwrap();
        let p = partition_greedy(&g, 2, &labels, 0.0).unwrap();
        assert_eq!(p.label_counts(&labels), vec![1, 1]);
        assert_eq!(p.node_counts(), vec![2, 2]);
    }

    #[test]
    fn greedy_rejects_bad_slack() {
        let g = g1();
        assert!(partition_greedy(&g, 2, &LabelSet::default(), -0.1).is_err());
        assert!(partition_greedy(&g, 2, &LabelSet::default(), f64::NAN).is_err());
        assert!(partition_greedy(&g, 0, &LabelSet::default(), 0.1).is_err());
    }

    #[test]
    fn greedy_beats_hash_on_rmat() {
        let g = build_csc(&generate_rmat(10, 8, RmatProbs::GRAPH500, 1).unwrap(), true).unwrap();
        let labels = LabelSet::random(g.num_nodes(), 0.3, 2).unwrap();
        let greedy = partition_greedy(&g, 4, &labels, DEFAULT_SLACK).unwrap();
        let hash = partition_hash(g.num_nodes(), 4).unwrap();
        assert!(edge_cut(&g, &greedy).unwrap() < edge_cut(&g, &hash).unwrap());
    }

    proptest! {
        #[test]
        fn greedy_respects_capacities(
            n in 1usize..120,
            density in 0.0f64..0.3,
            parts in 1u32..6,
            label_frac in 0.0f64..1.0,
            slack in 0.0f64..0.5,
            seed in any::<u64>(),
        ) {
            let m = ((n * n) as f64 * density) as usize;
            let g = build_csc(&generate_erdos_renyi(n, m, seed).unwrap(), false).unwrap();
            let labels = LabelSet::random(n, label_frac, seed ^ 1).unwrap();
            let p = partition_greedy(&g, parts, &labels, slack).unwrap();
            let node_cap = capacity(n, parts, slack);
            let label_cap = capacity(labels.len(), parts, slack);
            prop_assert!(p.node_counts().iter().all(|&c| c <= node_cap));
            prop_assert!(p.label_counts(&labels).iter().all(|&c| c <= label_cap));
            prop_assert!(p.node_counts().iter().all(|&c| c as f64 <= (1.0 + slack) * n.div_ceil(parts as usize) as f64 + 1e-9));
        }
    }
}
