//! Sparse adjacency storage.
//!
//! Both formats are destination-indexed: row `v` of a [`CscGraph`] lists the
//! in-neighbors (edge sources) of `v`, and a [`CooGraph`] stores each edge as a
//! `(dst, src)` pair. Canonical form sorts edges by `(dst, src)`, which makes
//! the two conversions exact inverses.

use crate::error::{Error, Result};

/// Global node index. Always 64-bit in memory.
pub type NodeId = u64;

/// Coordinate edge list: edge `i` runs from `src[i]` into `dst[i]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CooGraph {
    num_nodes: usize,
    dst: Vec<NodeId>,
    src: Vec<NodeId>,
}

impl CooGraph {
    pub fn new(num_nodes: usize, dst: Vec<NodeId>, src: Vec<NodeId>) -> Result<Self> {
        if dst.len() != src.len() {
            return Err(Error::Malformed(format!(
                "dst/src length mismatch: {} vs {}",
                dst.len(),
                src.len()
            )));
        }
        if let Some((i, _)) = dst
            .iter()
            .zip(&src)
            .enumerate()
            .find(|(_, (&d, &s))| d as usize >= num_nodes || s as usize >= num_nodes)
        {
            return Err(Error::Malformed(format!(
                "edge {i} ({} <- {}) out of range for {num_nodes} nodes",
                dst[i], src[i]
            )));
        }
        Ok(Self {
            num_nodes,
            dst,
            src,
        })
    }

    pub fn empty(num_nodes: usize) -> Self {
        Self {
            num_nodes,
            dst: Vec::new(),
            src: Vec::new(),
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn nnz(&self) -> usize {
        self.dst.len()
    }

    /// Destination (row) of every edge.
    pub fn dst(&self) -> &[NodeId] {
        &self.dst
    }

    /// Source (column) of every edge.
    pub fn src(&self) -> &[NodeId] {
        &self.src
    }

    /// Iterates `(src, dst)` pairs.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.src.iter().copied().zip(self.dst.iter().copied())
    }

    pub fn into_parts(self) -> (usize, Vec<NodeId>, Vec<NodeId>) {
        (self.num_nodes, self.dst, self.src)
    }
}

/// Compressed destination-indexed adjacency.
///
/// `indices[indptr[v]..indptr[v + 1]]` are the sources of the edges entering
/// row `v`. A graph over a single node set is square (`num_src == num_rows`);
/// message-flow blocks and machine partitions are bipartite, with rows and
/// source columns drawn from different index spaces.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CscGraph {
    num_src: usize,
    indptr: Vec<usize>,
    indices: Vec<NodeId>,
}

impl CscGraph {
    /// Square graph over `num_nodes` nodes.
    pub fn new(num_nodes: usize, indptr: Vec<usize>, indices: Vec<NodeId>) -> Result<Self> {
        Self::bipartite(num_nodes, num_nodes, indptr, indices)
    }

    /// Rows index one node set, entries index another of size `num_src`.
    pub fn bipartite(
        num_rows: usize,
        num_src: usize,
        indptr: Vec<usize>,
        indices: Vec<NodeId>,
    ) -> Result<Self> {
        if indptr.len() != num_rows + 1 {
            return Err(Error::Malformed(format!(
                "indptr has {} entries, expected {}",
                indptr.len(),
                num_rows + 1
            )));
        }
        if indptr[0] != 0 {
            return Err(Error::Malformed("indptr[0] must be 0".into()));
        }
        if indptr.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::Malformed("indptr is not nondecreasing".into()));
        }
        if indptr[num_rows] != indices.len() {
            return Err(Error::Malformed(format!(
                "indptr ends at {} but there are {} indices",
                indptr[num_rows],
                indices.len()
            )));
        }
        if let Some(&bad) = indices.iter().find(|&&u| u as usize >= num_src) {
            return Err(Error::Malformed(format!(
                "source {bad} out of range for {num_src} columns"
            )));
        }
        Ok(Self {
            num_src,
            indptr,
            indices,
        })
    }

    pub(crate) fn from_parts_unchecked(
        num_src: usize,
        indptr: Vec<usize>,
        indices: Vec<NodeId>,
    ) -> Self {
        debug_assert_eq!(*indptr.last().unwrap(), indices.len());
        Self {
            num_src,
            indptr,
            indices,
        }
    }

    pub fn empty(num_nodes: usize) -> Self {
        Self {
            num_src: num_nodes,
            indptr: vec![0; num_nodes + 1],
            indices: Vec::new(),
        }
    }

    /// Number of rows (destinations). Equals the node count for square graphs.
    pub fn num_nodes(&self) -> usize {
        self.indptr.len() - 1
    }

    pub fn num_rows(&self) -> usize {
        self.indptr.len() - 1
    }

    pub fn num_src(&self) -> usize {
        self.num_src
    }

    pub fn is_square(&self) -> bool {
        self.num_src == self.num_rows()
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn indptr(&self) -> &[usize] {
        &self.indptr
    }

    pub fn indices(&self) -> &[NodeId] {
        &self.indices
    }

    pub fn in_degree(&self, v: usize) -> usize {
        self.indptr[v + 1] - self.indptr[v]
    }

    /// In-neighbors of `v`, borrowed straight out of the index vector.
    pub fn in_neighbors(&self, v: NodeId) -> Result<&[NodeId]> {
        let n = self.num_rows();
        if v as usize >= n {
            return Err(Error::Contract(format!(
                "node {v} out of range for {n} rows"
            )));
        }
        Ok(self.row(v as usize))
    }

    /// Unchecked row access; panics when `v` is out of range.
    #[inline]
    pub fn row(&self, v: usize) -> &[NodeId] {
        &self.indices[self.indptr[v]..self.indptr[v + 1]]
    }

    /// True when every row is sorted ascending (the form `build_csc` emits).
    pub fn is_canonical(&self) -> bool {
        (0..self.num_rows()).all(|v| self.row(v).windows(2).all(|w| w[0] <= w[1]))
    }

    pub fn has_edge(&self, src: NodeId, dst: NodeId) -> bool {
        (dst as usize) < self.num_rows() && self.row(dst as usize).contains(&src)
    }

    pub fn into_parts(self) -> (usize, Vec<usize>, Vec<NodeId>) {
        (self.num_src, self.indptr, self.indices)
    }
}

/// Builds the canonical CSC of `edges`: rows ordered by destination, each
/// row's sources ascending. With `dedup`, repeated `(dst, src)` pairs collapse
/// to one edge; otherwise multi-edges are kept.
pub fn build_csc(edges: &CooGraph, dedup: bool) -> Result<CscGraph> {
    let n = edges.num_nodes;
    let mut indptr = vec![0usize; n + 1];
    for &d in &edges.dst {
        let d = d as usize;
        if d >= n {
            return Err(Error::Malformed(format!(
                "destination {d} out of range for {n} nodes"
            )));
        }
        indptr[d + 1] += 1;
    }
    for v in 0..n {
        indptr[v + 1] += indptr[v];
    }
    let mut cursor = indptr[..n].to_vec();
    let mut indices = vec![0 as NodeId; edges.nnz()];
    for (&d, &s) in edges.dst.iter().zip(&edges.src) {
        if s as usize >= n {
            return Err(Error::Malformed(format!(
                "source {s} out of range for {n} nodes"
            )));
        }
        let slot = &mut cursor[d as usize];
        indices[*slot] = s;
        *slot += 1;
    }
    for v in 0..n {
        indices[indptr[v]..indptr[v + 1]].sort_unstable();
    }
    if dedup {
        let mut write = 0;
        let mut new_ptr = vec![0usize; n + 1];
        for v in 0..n {
            let start = indptr[v];
            let end = indptr[v + 1];
            for i in start..end {
                if i == start || indices[i] != indices[i - 1] {
                    indices[write] = indices[i];
                    write += 1;
                }
            }
            new_ptr[v + 1] = write;
        }
        indices.truncate(write);
        indptr = new_ptr;
    }
    Ok(CscGraph {
        num_src: n,
        indptr,
        indices,
    })
}

/// Expands a CSC back to coordinates in destination-major, stored order.
pub fn csc_to_coo(g: &CscGraph) -> CooGraph {
    let mut dst = Vec::with_capacity(g.nnz());
    for v in 0..g.num_rows() {
        dst.extend(std::iter::repeat(v as NodeId).take(g.in_degree(v)));
    }
    CooGraph {
        num_nodes: g.num_rows(),
        dst,
        src: g.indices.clone(),
    }
}

/// Reverses every edge; row `u` of the result lists the out-neighbors of `u`.
pub fn transpose(g: &CscGraph) -> CscGraph {
    let coo = csc_to_coo(g);
    let swapped = CooGraph {
        num_nodes: coo.num_nodes,
        dst: coo.src,
        src: coo.dst,
    };
    build_csc(&swapped, false).expect("transpose of a valid graph is valid")
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn g1_layout() {
        let g = g1();
        assert_eq!(g.indptr(), &[0, 2, 3, 7, 7, 9]);
        assert_eq!(g.indices(), &[1, 2, 0, 0, 1, 3, 4, 2, 3]);
        assert_eq!(csc_to_coo(&g), g1_coo());
    }

    #[test]
    fn zero_and_self_loop() {
        let g = build_csc(&CooGraph::empty(3), false).unwrap();
        assert_eq!(g.indptr(), &[0, 0, 0, 0]);
        assert!(g.indices().is_empty());
        assert_eq!(csc_to_coo(&g).nnz(), 0);

        let g = build_csc(&CooGraph::new(1, vec![0], vec![0]).unwrap(), false).unwrap();
        assert_eq!(g.indptr(), &[0, 1]);
        assert_eq!(g.indices(), &[0]);
        let back = csc_to_coo(&g);
        assert_eq!((back.dst(), back.src()), (&[0][..], &[0][..]));
    }

    #[test]
    fn in_neighbors_g1() {
        let g = g1();
        assert_eq!(g.in_neighbors(2).unwrap(), &[0, 1, 3, 4]);
        assert!(g.in_neighbors(3).unwrap().is_empty());
        assert_eq!(g.in_neighbors(1).unwrap(), &[0]);
        assert!(matches!(g.in_neighbors(5), Err(Error::Contract(_))));
    }

    #[test]
    fn out_of_range_edges_rejected() {
        assert!(matches!(
            CooGraph::new(2, vec![2], vec![0]),
            Err(Error::Malformed(_))
        ));
        assert!(matches!(
            CooGraph::new(2, vec![0, 1], vec![0]),
            Err(Error::Malformed(_))
        ));
        assert!(CscGraph::new(2, vec![0, 1, 1], vec![2]).is_err());
        assert!(CscGraph::new(2, vec![0, 2, 1], vec![0]).is_err());
    }

    #[test]
    fn dedup_flag() {
        let coo = CooGraph::new(3, vec![1, 1, 1, 2], vec![0, 0, 2, 2]).unwrap();
        let kept = build_csc(&coo, false).unwrap();
        assert_eq!(kept.indices(), &[0, 0, 2, 2]);
        let deduped = build_csc(&coo, true).unwrap();
        assert_eq!(deduped.indptr(), &[0, 0, 2, 3]);
        assert_eq!(deduped.indices(), &[0, 2, 2]);
    }

    #[test]
    fn transpose_g1() {
        let t = transpose(&g1());
        // out-neighbors of 2: 0 and 4
        assert_eq!(t.row(2), &[0, 4]);
        assert_eq!(transpose(&t), g1());
    }

    fn arb_coo() -> impl Strategy<Value = CooGraph> {
        (1usize..40).prop_flat_map(|n| {
            proptest::collection::vec((0..n as u64, 0..n as u64), 0..200).prop_map(move |edges| {
                let (dst, src) = edges.into_iter().unzip();
                CooGraph::new(n, dst, src).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn csc_coo_fixed_point(coo in arb_coo()) {
            let g = build_csc(&coo, false).unwrap();
            let g2 = build_csc(&csc_to_coo(&g), false).unwrap();
            prop_assert_eq!(&g, &g2);
            prop_assert!(g.is_canonical());
            let degree_sum: usize = (0..g.num_nodes()).map(|v| g.in_degree(v)).sum();
            prop_assert_eq!(degree_sum, coo.nnz());
            for v in 0..g.num_nodes() {
                let brute = coo.dst().iter().filter(|&&d| d as usize == v).count();
                prop_assert_eq!(g.in_neighbors(v as u64).unwrap().len(), brute);
                let mut expect: Vec<u64> = coo.edges().filter(|&(_, d)| d as usize == v).map(|(s, _)| s).collect();
                expect.sort_unstable();
                prop_assert_eq!(g.row(v), &expect[..]);
            }
        }
    }
}
