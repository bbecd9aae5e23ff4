//! Neighborhood sampling into message-flow-graph blocks.
//!
//! Every random choice is drawn from a stream keyed by
//! `(global_seed, level, destination id)`, so the sampled neighbors of a node
//! never depend on call order, kernel, thread count, or which process does
//! the sampling.

mod block;
mod kernel;
mod minibatch;

pub use block::{read_block, write_block, MfgBlock, MiniBatchSample, BLOCK_MAGIC};
pub use kernel::{
    compact_coo, compact_samples, fused_sample_level, fused_sample_level_par,
    two_step_sample_level, KernelStats, SamplerScratch,
};
pub use minibatch::{sample_minibatch, seed_batches, Kernel};

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{CscGraph, NodeId};

/// Per-level fanouts ordered top-down: `fanouts[0]` applies to the batch
/// seeds (level L), the last entry to level 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FanoutPlan {
    fanouts: Vec<usize>,
}

impl FanoutPlan {
    pub fn new(fanouts: Vec<usize>) -> Result<Self> {
        if fanouts.is_empty() {
            return Err(Error::Parameter(
                "fanout plan needs at least one level".into(),
            ));
        }
        if fanouts.contains(&0) {
            return Err(Error::Parameter("every fanout must be at least 1".into()));
        }
        Ok(Self { fanouts })
    }

    /// Parses a comma-separated top-down list such as `15,10,5`.
    pub fn parse(s: &str) -> Result<Self> {
        let fanouts = s
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::Parameter(format!("bad fanout {t:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(fanouts)
    }

    pub fn num_levels(&self) -> usize {
        self.fanouts.len()
    }

    pub fn fanouts(&self) -> &[usize] {
        &self.fanouts
    }

    /// `(level number, fanout)` pairs from level L down to level 1.
    pub fn levels(&self) -> impl Iterator<Item = (u32, usize)> + '_ {
        let l = self.fanouts.len() as u32;
        self.fanouts
            .iter()
            .enumerate()
            .map(move |(i, &k)| (l - i as u32, k))
    }
}

impl std::fmt::Display for FanoutPlan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.fanouts.iter().map(|k| k.to_string()).collect();
        f.write_str(&parts.join(","))
    }
}

/// How `choose` picks neighbors once a node's degree exceeds the fanout.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Choice {
    /// Uniform without replacement.
    Uniform,
    /// Deterministic: the first `k` stored neighbors. For hand-traceable tests.
    FirstK,
}

/// Root of all sampling randomness.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SamplerRng {
    pub global_seed: u64,
    pub choice: Choice,
}

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Folds three words into one 64-bit key with SplitMix64 finalization.
#[inline]
pub fn stream_key(global_seed: u64, domain: u64, id: u64) -> u64 {
    let k = mix64(global_seed.wrapping_add(GOLDEN));
    let k = mix64(k ^ domain.wrapping_mul(GOLDEN));
    mix64(k ^ id)
}

impl SamplerRng {
    pub fn new(global_seed: u64) -> Self {
        Self {
            global_seed,
            choice: Choice::Uniform,
        }
    }

    pub fn first_k() -> Self {
        Self {
            global_seed: 0,
            choice: Choice::FirstK,
        }
    }

    /// The stream used to pick `dst`'s neighbors at `level`.
    #[inline]
    pub fn stream(&self, level: u32, dst: NodeId) -> NeighborStream {
        match self.choice {
            Choice::FirstK => NeighborStream { rng: None },
            Choice::Uniform => NeighborStream {
                rng: Some(ChaCha8Rng::seed_from_u64(stream_key(
                    self.global_seed,
                    level as u64,
                    dst,
                ))),
            },
        }
    }

    /// A general-purpose generator for one `(domain, id)` pair, e.g. epoch
    /// shuffles. Domains are disjoint from sampling levels.
    pub fn aux_rng(&self, domain: u64, id: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(stream_key(self.global_seed, domain | (1 << 63), id))
    }
}

/// One keyed random stream, or none in first-k mode.
pub struct NeighborStream {
    rng: Option<ChaCha8Rng>,
}

/// Fills `out` with a choice of `out.len()` neighbors. When `out.len()`
/// equals the degree every neighbor is copied in storage order; otherwise
/// distinct positions are drawn uniformly and written in selection order.
#[inline]
pub fn choose_into(neighbors: &[NodeId], stream: &mut NeighborStream, out: &mut [NodeId]) {
    let k = out.len();
    debug_assert!(k <= neighbors.len());
    if k == neighbors.len() {
        out.copy_from_slice(neighbors);
        return;
    }
    match &mut stream.rng {
        None => out.copy_from_slice(&neighbors[..k]),
        Some(rng) => {
            for (slot, pos) in out
                .iter_mut()
                .zip(index::sample(rng, neighbors.len(), k).iter())
            {
                *slot = neighbors[pos];
            }
        }
    }
}

/// At most `k` neighbors: all of them when the degree is at most `k`,
/// otherwise `k` distinct ones.
pub fn choose(neighbors: &[NodeId], k: usize, stream: &mut NeighborStream) -> Vec<NodeId> {
    let mut out = vec![0; k.min(neighbors.len())];
    choose_into(neighbors, stream, &mut out);
    out
}

/// Samples up to `k` incoming edges of `v`, returned as `(src, dst)` pairs.
pub fn sample_edges(
    g: &CscGraph,
    v: NodeId,
    k: usize,
    rng: &SamplerRng,
    level: u32,
) -> Result<Vec<(NodeId, NodeId)>> {
    let neighbors = g.in_neighbors(v)?;
    let mut stream = rng.stream(level, v);
    Ok(choose(neighbors, k, &mut stream)
        .into_iter()
        .map(|u| (u, v))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::fixtures::g1;
    use std::collections::HashMap;

    #[test]
    fn fanout_plan_validation() {
        assert!(FanoutPlan::new(vec![]).is_err());
        assert!(FanoutPlan::new(vec![3, 0]).is_err());
        let p = FanoutPlan::parse("15, 10,5").unwrap();
        assert_eq!(p.fanouts(), &[15, 10, 5]);
        assert_eq!(
            p.levels().collect::<Vec<_>>(),
            vec![(3, 15), (2, 10), (1, 5)]
        );
        assert_eq!(p.to_string(), "15,10,5");
        assert!(FanoutPlan::parse("3,x").is_err());
    }

    #[test]
    fn choose_small_and_empty() {
        let rng = SamplerRng::new(1);
        assert_eq!(choose(&[1, 2], 5, &mut rng.stream(1, 0)), vec![1, 2]);
        assert!(choose(&[], 3, &mut rng.stream(1, 0)).is_empty());
        assert_eq!(
            choose(&[4, 5, 6], 2, &mut SamplerRng::first_k().stream(1, 0)),
            vec![4, 5]
        );
    }

    #[test]
    fn streams_are_keyed_not_ordered() {
        let rng = SamplerRng::new(9);
        let n: Vec<NodeId> = (0..50).collect();
        let a = choose(&n, 5, &mut rng.stream(2, 17));
        let _ = choose(&n, 5, &mut rng.stream(2, 18));
        let b = choose(&n, 5, &mut rng.stream(2, 17));
        assert_eq!(a, b);
        assert_ne!(a, choose(&n, 5, &mut rng.stream(1, 17)));
        assert_ne!(a, choose(&n, 5, &mut SamplerRng::new(10).stream(2, 17)));
    }

    #[test]
    fn pair_frequencies_match_enumeration() {
        // All C(4,2) = 6 unordered pairs are equally likely.
        let neighbors = [0, 1, 3, 4];
        let trials = 100_000u64;
        let rng = SamplerRng::new(2024);
        let mut counts: HashMap<(NodeId, NodeId), u64> = HashMap::new();
        for t in 0..trials {
            let mut pick = choose(&neighbors, 2, &mut rng.stream(1, t));
            assert_eq!(pick.len(), 2);
            assert_ne!(pick[0], pick[1]);
            pick.sort_unstable();
            *counts.entry((pick[0], pick[1])).or_default() += 1;
        }
        assert_eq!(counts.len(), 6);
        let p = 1.0 / 6.0;
        let sigma = (trials as f64 * p * (1.0 - p)).sqrt();
        for (pair, c) in counts {
            assert!(
                (c as f64 - trials as f64 * p).abs() <= 5.0 * sigma,
                "{pair:?}: {c}"
            );
        }
    }

    #[test]
    fn sample_edges_g1() {
        let g = g1();
        let rng = SamplerRng::new(3);
        assert!(sample_edges(&g, 3, 4, &rng, 1).unwrap().is_empty());
        assert_eq!(
            sample_edges(&g, 0, 10, &rng, 1).unwrap(),
            vec![(1, 0), (2, 0)]
        );
        let e = sample_edges(&g, 2, 2, &rng, 1).unwrap();
        assert_eq!(e.len(), 2);
        assert_ne!(e[0], e[1]);
        assert!(e.iter().all(|&(u, v)| v == 2 && [0, 1, 3, 4].contains(&u)));
        assert!(matches!(
            sample_edges(&g, 5, 1, &rng, 1),
            Err(Error::Contract(_))
        ));
    }
}
