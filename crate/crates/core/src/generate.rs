//! Synthetic graph generators. Every generator is a pure function of its
//! arguments, seed included.

use rand::{seq::index, Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{CooGraph, NodeId};

pub const MAX_RMAT_SCALE: u32 = 30;

/// Quadrant probabilities for R-MAT recursion. `a` is the top-left
/// (low source, low destination) quadrant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RmatProbs {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl RmatProbs {
    pub const UNIFORM: Self = Self {
        a: 0.25,
        b: 0.25,
        c: 0.25,
        d: 0.25,
    };
    /// Graph500 defaults.
    pub const GRAPH500: Self = Self {
        a: 0.57,
        b: 0.19,
        c: 0.19,
        d: 0.05,
    };

    fn validate(&self) -> Result<()> {
        let ps = [self.a, self.b, self.c, self.d];
        if ps.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::Parameter(format!(
                "R-MAT probabilities must be nonnegative: {ps:?}"
            )));
        }
        let sum: f64 = ps.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Parameter(format!(
                "R-MAT probabilities sum to {sum}, not 1"
            )));
        }
        Ok(())
    }
}

impl Default for RmatProbs {
    fn default() -> Self {
        Self::GRAPH500
    }
}

/// `num_edges` distinct `(dst, src)` pairs drawn uniformly from all `n * n`
/// ordered pairs (self-loops included), returned in canonical order.
pub fn generate_erdos_renyi(n: usize, num_edges: usize, seed: u64) -> Result<CooGraph> {
    let pairs = n
        .checked_mul(n)
        .ok_or_else(|| Error::Parameter(format!("{n} nodes overflow the pair space")))?;
    if num_edges > pairs {
        return Err(Error::Parameter(format!(
            "{num_edges} distinct edges requested but only {pairs} pairs exist"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked: Vec<usize> = index::sample(&mut rng, pairs, num_edges).into_vec();
    picked.sort_unstable();
    let dst = picked.iter().map(|&p| (p / n) as NodeId).collect();
    let src = picked.iter().map(|&p| (p % n) as NodeId).collect();
    CooGraph::new(n, dst, src)
}

/// R-MAT graph with `2^scale` nodes and `edge_factor * 2^scale` edges in
/// generation order. Duplicate edges and self-loops are kept.
pub fn generate_rmat(
    scale: u32,
    edge_factor: usize,
    probs: RmatProbs,
    seed: u64,
) -> Result<CooGraph> {
    if scale > MAX_RMAT_SCALE {
        return Err(Error::Parameter(format!(
            "R-MAT scale {scale} exceeds {MAX_RMAT_SCALE}"
        )));
    }
    probs.validate()?;
    let n = 1usize << scale;
    let m = edge_factor
        .checked_mul(n)
        .ok_or_else(|| Error::Parameter("edge count overflows".into()))?;
    let ab = probs.a + probs.b;
    let abc = ab + probs.c;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut dst = Vec::with_capacity(m);
    let mut src = Vec::with_capacity(m);
    for _ in 0..m {
        let (mut s, mut d) = (0 as NodeId, 0 as NodeId);
        for level in (0..scale).rev() {
            let r: f64 = rng.gen();
            let bit = 1 << level;
            if r < probs.a {
            } else if r < ab {
                d |= bit;
            } else if r < abc {
                s |= bit;
            } else {
                s |= bit;
                d |= bit;
            }
        }
        dst.push(d);
        src.push(s);
    }
    CooGraph::new(n, dst, src)
}

/// Two disjoint directed cliques of `size` nodes each (no self-loops):
/// nodes `0..size` and `size..2*size`.
pub fn generate_two_cliques(size: usize) -> CooGraph {
    let mut dst = Vec::new();
    let mut src = Vec::new();
    for base in [0, size] {
        for v in base..base + size {
            for u in base..base + size {
                if u != v {
                    dst.push(v as NodeId);
                    src.push(u as NodeId);
                }
            }
        }
    }
    CooGraph::new(2 * size, dst, src).expect("clique edges are in range")
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn erdos_renyi_edge_cases() {
        assert_eq!(generate_erdos_renyi(4, 0, 1).unwrap().nnz(), 0);
        let full = generate_erdos_renyi(2, 4, 1).unwrap();
        let pairs: Vec<_> = full.edges().collect();
        assert_eq!(pairs, vec![(0, 0), (1, 0), (0, 1), (1, 1)]);
        assert!(matches!(
            generate_erdos_renyi(2, 5, 1),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn erdos_renyi_deterministic_and_distinct() {
        let a = generate_erdos_renyi(100, 500, 7).unwrap();
        let b = generate_erdos_renyi(100, 500, 7).unwrap();
        assert_eq!(a, b);
        let set: HashSet<_> = a.edges().collect();
        assert_eq!(set.len(), 500);
        assert_ne!(a, generate_erdos_renyi(100, 500, 8).unwrap());
    }

    #[test]
    fn rmat_cardinality_and_determinism() {
        let g = generate_rmat(3, 2, RmatProbs::GRAPH500, 1).unwrap();
        assert_eq!((g.num_nodes(), g.nnz()), (8, 16));
        assert_eq!(
            generate_rmat(8, 4, RmatProbs::GRAPH500, 42).unwrap(),
            generate_rmat(8, 4, RmatProbs::GRAPH500, 42).unwrap()
        );
    }

    #[test]
    fn rmat_rejects_bad_params() {
        assert!(matches!(
            generate_rmat(31, 1, RmatProbs::GRAPH500, 0),
            Err(Error::Parameter(_))
        ));
        let bad = RmatProbs {
            a: 0.5,
            b: 0.25,
            c: 0.25,
            d: 0.1,
        };
        assert!(matches!(
            generate_rmat(3, 1, bad, 0),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn rmat_uniform_quadrants_binomial() {
        // Each edge lands in a top-level quadrant with p = 1/4 independently,
        // so each count is Binomial(m, 1/4).
        let scale = 10;
        let g = generate_rmat(scale, 16, RmatProbs::UNIFORM, 5).unwrap();
        let half = 1u64 << (scale - 1);
        let mut counts = [0usize; 4];
        for (s, d) in g.edges() {
            counts[((s >= half) as usize) * 2 + (d >= half) as usize] += 1;
        }
        let m = g.nnz() as f64;
        let sigma = (m * 0.25 * 0.75).sqrt();
        for c in counts {
            assert!((c as f64 - m / 4.0).abs() <= 5.0 * sigma, "{counts:?}");
        }
    }

    #[test]
    fn two_cliques_shape() {
        let g = generate_two_cliques(10);
        assert_eq!(g.num_nodes(), 20);
        assert_eq!(g.nnz(), 2 * 10 * 9);
        assert!(g.edges().all(|(s, d)| (s < 10) == (d < 10) && s != d));
    }
}
