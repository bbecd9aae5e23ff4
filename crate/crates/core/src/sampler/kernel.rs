//! Single-level sampling kernels.
//!
//! The fused kernel samples straight into a compacted CSC block: row
//! pointers are written while sampling, then one pass over the concatenated
//! samples assigns local source ids by first occurrence through a dense
//! node-indexed map. The two-step kernel is the conventional path: sample
//! into a global-id COO edge list, relabel through hash maps, then convert
//! COO to CSC. Both consume identical keyed streams, so their outputs are
//! bit-identical.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};

use rayon::prelude::*;

use super::block::MfgBlock;
use super::{choose_into, SamplerRng};
use crate::error::{Error, Result};
use crate::graph::{CscGraph, NodeId};

const UNCLAIMED: u64 = u64::MAX;
const SCAN_CHUNK: usize = 4096;

#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct KernelStats {
    /// Intermediate COO edge buffers allocated by the two-step path.
    pub coo_buffers_allocated: u64,
    pub levels_sampled: u64,
}

/// Per-worker scratch: the node-indexed compaction map plus counters.
///
/// The map is reset by bumping an epoch stamp instead of refilling, so a
/// call costs time proportional to its sample, not to the graph size.
#[derive(Debug, Default)]
pub struct SamplerScratch {
    stamp: Vec<u32>,
    local: Vec<u32>,
    epoch: u32,
    first: Vec<AtomicU64>,
    pub stats: KernelStats,
}

impl SamplerScratch {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn for_graph(num_nodes: usize) -> Self {
        let mut s = Self::default();
        s.ensure(num_nodes);
        s
    }

    fn ensure(&mut self, n: usize) {
        if self.stamp.len() < n {
            self.stamp.resize(n, 0);
            self.local.resize(n, 0);
        }
    }

    fn ensure_atomic(&mut self, n: usize) {
        if self.first.len() < n {
            self.first.resize_with(n, || AtomicU64::new(UNCLAIMED));
        }
    }

    fn next_epoch(&mut self) -> u32 {
        if self.epoch == u32::MAX {
            self.stamp.iter_mut().for_each(|s| *s = 0);
            self.epoch = 0;
        }
        self.epoch += 1;
        self.epoch
    }

    fn check_seeds(&mut self, seeds: &[NodeId], n: usize) -> Result<()> {
        self.ensure(n);
        let e = self.next_epoch();
        for &v in seeds {
            if v as usize >= n {
                return Err(Error::Contract(format!(
                    "seed {v} out of range for {n} nodes"
                )));
            }
            let s = &mut self.stamp[v as usize];
            if *s == e {
                return Err(Error::Contract(format!("duplicate seed {v}")));
            }
            *s = e;
        }
        Ok(())
    }
}

#[inline]
fn pick(g: &CscGraph, v: NodeId, rng: &SamplerRng, level: u32, out: &mut [NodeId]) {
    let neighbors = g.row(v as usize);
    if out.len() == neighbors.len() {
        out.copy_from_slice(neighbors);
    } else {
        choose_into(neighbors, &mut rng.stream(level, v), out);
    }
}

fn local_id(x: usize) -> u32 {
    u32::try_from(x).expect("block source count exceeds u32 range")
}

/// First-occurrence compaction of per-seed samples into a block.
///
/// `indptr` delimits each seed's samples inside `samples` (global ids).
/// With `include_dst`, the seeds take local ids `0..seeds.len()` before any
/// sampled node. `samples` is rewritten in place into local ids.
pub fn compact_samples(
    seeds: &[NodeId],
    indptr: Vec<usize>,
    mut samples: Vec<NodeId>,
    include_dst: bool,
    num_nodes: usize,
    scratch: &mut SamplerScratch,
) -> Result<MfgBlock> {
    if indptr.len() != seeds.len() + 1 || indptr.last() != Some(&samples.len()) {
        return Err(Error::Contract(
            "row pointers do not match seeds and samples".into(),
        ));
    }
    scratch.ensure(num_nodes);
    let e = scratch.next_epoch();
    let mut src_globals = Vec::with_capacity(samples.len() / 2 + seeds.len());
    if include_dst {
        for &v in seeds {
            if v as usize >= num_nodes {
                return Err(Error::Contract(format!("seed {v} out of range")));
            }
            if scratch.stamp[v as usize] == e {
                return Err(Error::Contract(format!("duplicate seed {v}")));
            }
            scratch.stamp[v as usize] = e;
            scratch.local[v as usize] = local_id(src_globals.len());
            src_globals.push(v);
        }
    }
    for x in samples.iter_mut() {
        let v = *x as usize;
        if v >= num_nodes {
            return Err(Error::Contract(format!("sampled node {v} out of range")));
        }
        if scratch.stamp[v] != e {
            scratch.stamp[v] = e;
            scratch.local[v] = local_id(src_globals.len());
            src_globals.push(*x);
        }
        *x = scratch.local[v] as NodeId;
    }
    scratch.stats.levels_sampled += 1;
    Ok(MfgBlock {
        dst_globals: seeds.to_vec(),
        block: CscGraph::from_parts_unchecked(src_globals.len(), indptr, samples),
        src_globals,
        include_dst,
    })
}

/// Fused sampling of one level. Returns the block and the next level's seeds
/// (the block's sources). Seeds must be unique.
pub fn fused_sample_level(
    g: &CscGraph,
    seeds: &[NodeId],
    k: usize,
    rng: &SamplerRng,
    level: u32,
    include_dst: bool,
    scratch: &mut SamplerScratch,
) -> Result<(MfgBlock, Vec<NodeId>)> {
    let n = g.num_rows();
    scratch.check_seeds(seeds, n)?;
    let mut indptr = Vec::with_capacity(seeds.len() + 1);
    indptr.push(0);
    let mut samples: Vec<NodeId> = Vec::with_capacity(seeds.len() * k.min(16));
    for &v in seeds {
        let cnt = k.min(g.in_degree(v as usize));
        let start = samples.len();
        samples.resize(start + cnt, 0);
        pick(g, v, rng, level, &mut samples[start..]);
        indptr.push(start + cnt);
    }
    let block = compact_samples(seeds, indptr, samples, include_dst, n, scratch)?;
    let next = block.src_globals.clone();
    Ok((block, next))
}

/// Parallel fused kernel. Sampling runs per seed into disjoint slices; the
/// compaction claims each node's first position with an atomic minimum and
/// numbers the winners with a chunked prefix scan, which reproduces the
/// sequential first-occurrence order exactly.
pub fn fused_sample_level_par(
    g: &CscGraph,
    seeds: &[NodeId],
    k: usize,
    rng: &SamplerRng,
    level: u32,
    include_dst: bool,
    scratch: &mut SamplerScratch,
) -> Result<(MfgBlock, Vec<NodeId>)> {
    let n = g.num_rows();
    scratch.check_seeds(seeds, n)?;

    let counts: Vec<usize> = seeds
        .par_iter()
        .map(|&v| k.min(g.in_degree(v as usize)))
        .collect();
    let mut indptr = Vec::with_capacity(seeds.len() + 1);
    indptr.push(0);
    let mut acc = 0;
    for &c in &counts {
        acc += c;
        indptr.push(acc);
    }
    let mut samples: Vec<NodeId> = vec![0; acc];
    {
        let mut slices = Vec::with_capacity(seeds.len());
        let mut rest = &mut samples[..];
        for &c in &counts {
            let (head, tail) = rest.split_at_mut(c);
            slices.push(head);
            rest = tail;
        }
        slices
            .into_par_iter()
            .zip(seeds.par_iter())
            .for_each(|(out, &v)| pick(g, v, rng, level, out));
    }

    scratch.ensure_atomic(n);
    let first = &scratch.first;
    let offset = if include_dst { seeds.len() } else { 0 };
    if include_dst {
        seeds.par_iter().enumerate().for_each(|(i, &v)| {
            first[v as usize].fetch_min(i as u64, Ordering::Relaxed);
        });
    }
    samples.par_iter().enumerate().for_each(|(i, &v)| {
        first[v as usize].fetch_min((offset + i) as u64, Ordering::Relaxed);
    });
    let is_first =
        |pos: usize, v: NodeId| first[v as usize].load(Ordering::Relaxed) == (offset + pos) as u64;

    let chunk_new: Vec<usize> = samples
        .par_chunks(SCAN_CHUNK)
        .enumerate()
        .map(|(ci, ch)| {
            ch.iter()
                .enumerate()
                .filter(|&(j, &v)| is_first(ci * SCAN_CHUNK + j, v))
                .count()
        })
        .collect();
    let total_new: usize = chunk_new.iter().sum();
    let mut src_globals: Vec<NodeId> = vec![0; offset + total_new];
    if include_dst {
        src_globals[..offset].copy_from_slice(seeds);
    }
    {
        let mut outs = Vec::with_capacity(chunk_new.len());
        let mut rest = &mut src_globals[offset..];
        for &c in &chunk_new {
            let (head, tail) = rest.split_at_mut(c);
            outs.push(head);
            rest = tail;
        }
        samples
            .par_chunks(SCAN_CHUNK)
            .enumerate()
            .zip(outs.into_par_iter())
            .for_each(|((ci, ch), out)| {
                let mut w = 0;
                for (j, &v) in ch.iter().enumerate() {
                    if is_first(ci * SCAN_CHUNK + j, v) {
                        out[w] = v;
                        w += 1;
                    }
                }
            });
    }
    local_id(src_globals.len());
    src_globals.par_iter().enumerate().for_each(|(local, &v)| {
        first[v as usize].store(local as u64, Ordering::Relaxed);
    });
    samples
        .par_iter_mut()
        .for_each(|x| *x = first[*x as usize].load(Ordering::Relaxed));
    src_globals
        .par_iter()
        .for_each(|&v| first[v as usize].store(UNCLAIMED, Ordering::Relaxed));
    scratch.stats.levels_sampled += 1;

    let next = src_globals.clone();
    let block = MfgBlock {
        dst_globals: seeds.to_vec(),
        block: CscGraph::from_parts_unchecked(src_globals.len(), indptr, samples),
        src_globals,
        include_dst,
    };
    Ok((block, next))
}

/// Conventional two-step sampling: global COO first, then relabel and
/// convert to CSC.
pub fn two_step_sample_level(
    g: &CscGraph,
    seeds: &[NodeId],
    k: usize,
    rng: &SamplerRng,
    level: u32,
    include_dst: bool,
    scratch: &mut SamplerScratch,
) -> Result<(MfgBlock, Vec<NodeId>)> {
    let n = g.num_rows();
    let mut row_of: HashMap<NodeId, usize> = HashMap::with_capacity(seeds.len());
    for (i, &v) in seeds.iter().enumerate() {
        if v as usize >= n {
            return Err(Error::Contract(format!(
                "seed {v} out of range for {n} nodes"
            )));
        }
        if row_of.insert(v, i).is_some() {
            return Err(Error::Contract(format!("duplicate seed {v}")));
        }
    }

    // Step 1: sampled edges as a global-id COO list. Step 2 is compact_coo.
    let mut coo_dst: Vec<NodeId> = Vec::new();
    let mut coo_src: Vec<NodeId> = Vec::new();
    scratch.stats.coo_buffers_allocated += 2;
    let mut picked = Vec::new();
    for &v in seeds {
        let cnt = k.min(g.in_degree(v as usize));
        picked.resize(cnt, 0);
        pick(g, v, rng, level, &mut picked);
        for &u in &picked {
            coo_dst.push(v);
            coo_src.push(u);
        }
    }

    compact_coo(seeds, row_of, &coo_dst, &coo_src, include_dst, scratch)
}

/// The relabel-and-convert stage of the two-step path: maps a global-id COO
/// sample (edges grouped by any order of destination) onto local ids through
/// hash maps, then builds the CSC with a stable counting sort on the row.
/// `row_of` maps each seed to its row.
pub fn compact_coo(
    seeds: &[NodeId],
    row_of: HashMap<NodeId, usize>,
    coo_dst: &[NodeId],
    coo_src: &[NodeId],
    include_dst: bool,
    scratch: &mut SamplerScratch,
) -> Result<(MfgBlock, Vec<NodeId>)> {
    let mut src_of: HashMap<NodeId, NodeId> =
        HashMap::with_capacity(coo_src.len() / 2 + seeds.len());
    let mut src_globals = Vec::new();
    if include_dst {
        for &v in seeds {
            src_of.insert(v, src_globals.len() as NodeId);
            src_globals.push(v);
        }
    }
    let local_src: Vec<NodeId> = coo_src
        .iter()
        .map(|&u| {
            *src_of.entry(u).or_insert_with(|| {
                src_globals.push(u);
                (src_globals.len() - 1) as NodeId
            })
        })
        .collect();
    let local_dst = coo_dst
        .iter()
        .map(|v| {
            row_of
                .get(v)
                .copied()
                .ok_or_else(|| Error::Contract(format!("edge into non-seed {v}")))
        })
        .collect::<Result<Vec<usize>>>()?;

    let mut indptr = vec![0usize; seeds.len() + 1];
    for &r in &local_dst {
        indptr[r + 1] += 1;
    }
    for i in 0..seeds.len() {
        indptr[i + 1] += indptr[i];
    }
    let mut cursor = indptr[..seeds.len()].to_vec();
    let mut indices = vec![0 as NodeId; local_src.len()];
    for (&r, &s) in local_dst.iter().zip(&local_src) {
        indices[cursor[r]] = s;
        cursor[r] += 1;
    }
    scratch.stats.levels_sampled += 1;

    let next = src_globals.clone();
    let block = MfgBlock {
        dst_globals: seeds.to_vec(),
        block: CscGraph::from_parts_unchecked(src_globals.len(), indptr, indices),
        src_globals,
        include_dst,
    };
    Ok((block, next))
}
