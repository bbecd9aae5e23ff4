use rand::seq::SliceRandom;

use super::block::{MfgBlock, MiniBatchSample};
use super::kernel::{
    fused_sample_level, fused_sample_level_par, two_step_sample_level, SamplerScratch,
};
use super::{FanoutPlan, SamplerRng};
use crate::error::{Error, Result};
use crate::features::LabelSet;
use crate::graph::{CscGraph, NodeId};

const EPOCH_DOMAIN: u64 = 0xE90C;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kernel {
    Fused,
    FusedParallel,
    TwoStep,
}

impl Kernel {
    pub fn sample_level(
        self,
        g: &CscGraph,
        seeds: &[NodeId],
        k: usize,
        rng: &SamplerRng,
        level: u32,
        include_dst: bool,
        scratch: &mut SamplerScratch,
    ) -> Result<(MfgBlock, Vec<NodeId>)> {
        match self {
            Kernel::Fused => fused_sample_level(g, seeds, k, rng, level, include_dst, scratch),
            Kernel::FusedParallel => {
                fused_sample_level_par(g, seeds, k, rng, level, include_dst, scratch)
            }
            Kernel::TwoStep => two_step_sample_level(g, seeds, k, rng, level, include_dst, scratch),
        }
    }
}

impl std::str::FromStr for Kernel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fused" => Ok(Kernel::Fused),
            "fused-par" | "fused-parallel" => Ok(Kernel::FusedParallel),
            "two-step" | "two_step" => Ok(Kernel::TwoStep),
            other => Err(Error::Parameter(format!("unknown kernel {other:?}"))),
        }
    }
}

/// Samples all levels of a minibatch, top level first. Each level's sources
/// become the seeds of the level below.
pub fn sample_minibatch(
    g: &CscGraph,
    batch: &[NodeId],
    plan: &FanoutPlan,
    rng: &SamplerRng,
    kernel: Kernel,
    include_dst: bool,
    scratch: &mut SamplerScratch,
) -> Result<MiniBatchSample> {
    if batch.is_empty() {
        return Err(Error::Parameter(
            "minibatch must contain at least one seed".into(),
        ));
    }
    let mut blocks = Vec::with_capacity(plan.num_levels());
    let mut seeds = batch.to_vec();
    for (level, k) in plan.levels() {
        let (block, next) = kernel.sample_level(g, &seeds, k, rng, level, include_dst, scratch)?;
        blocks.push(block);
        seeds = next;
    }
    Ok(MiniBatchSample {
        blocks,
        input_nodes: seeds,
    })
}

/// Shuffles the labeled nodes for `epoch` and cuts them into batches of
/// `batch_size`; the last batch may be short.
pub fn seed_batches(
    labels: &LabelSet,
    batch_size: usize,
    rng: &SamplerRng,
    epoch: u64,
) -> Result<Vec<Vec<NodeId>>> {
    if batch_size == 0 {
        return Err(Error::Parameter("batch size must be at least 1".into()));
    }
    if labels.is_empty() {
        return Err(Error::Parameter("label set is empty".into()));
    }
    let mut order = labels.nodes().to_vec();
    order.shuffle(&mut rng.aux_rng(EPOCH_DOMAIN, epoch));
    Ok(order.chunks(batch_size).map(<[NodeId]>::to_vec).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{generate_rmat, RmatProbs};
    use crate::graph::build_csc;
    use crate::graph::fixtures::g1;

    #[test]
    fn two_level_hand_trace() {
        let plan = FanoutPlan::new(vec![1, 1]).unwrap();
        let s = sample_minibatch(
            &g1(),
            &[2],
            &plan,
            &SamplerRng::first_k(),
            Kernel::Fused,
            false,
            &mut SamplerScratch::new(),
        )
        .unwrap();
        assert_eq!(s.blocks.len(), 2);
        assert_eq!(
            (
                s.blocks[0].dst_globals.as_slice(),
                s.blocks[0].src_globals.as_slice()
            ),
            (&[2][..], &[0][..])
        );
        assert_eq!(
            (
                s.blocks[1].dst_globals.as_slice(),
                s.blocks[1].src_globals.as_slice()
            ),
            (&[0][..], &[1][..])
        );
        assert_eq!(s.input_nodes, vec![1]);
        assert_eq!(s.seeds(), &[2]);
    }

    #[test]
    fn single_level_is_one_kernel_call() {
        let g = g1();
        let rng = SamplerRng::new(5);
        let plan = FanoutPlan::new(vec![2]).unwrap();
        let s = sample_minibatch(
            &g,
            &[2, 4],
            &plan,
            &rng,
            Kernel::Fused,
            true,
            &mut SamplerScratch::new(),
        )
        .unwrap();
        let (b, next) =
            fused_sample_level(&g, &[2, 4], 2, &rng, 1, true, &mut SamplerScratch::new()).unwrap();
        assert_eq!(s.blocks, vec![b]);
        assert_eq!(s.input_nodes, next);
    }

    #[test]
    fn chain_links_and_kernels_agree() {
        let g = build_csc(&generate_rmat(9, 8, RmatProbs::GRAPH500, 3).unwrap(), false).unwrap();
        let plan = FanoutPlan::new(vec![15, 10, 5]).unwrap();
        let rng = SamplerRng::new(77);
        let batch: Vec<NodeId> = (0..64).map(|i| i * 7).collect();
        for include_dst in [false, true] {
            let mut s = SamplerScratch::new();
            let a = sample_minibatch(&g, &batch, &plan, &rng, Kernel::Fused, include_dst, &mut s)
                .unwrap();
            let b = sample_minibatch(
                &g,
                &batch,
                &plan,
                &rng,
                Kernel::TwoStep,
                include_dst,
                &mut s,
            )
            .unwrap();
            let c = sample_minibatch(
                &g,
                &batch,
                &plan,
                &rng,
                Kernel::FusedParallel,
                include_dst,
                &mut s,
            )
            .unwrap();
            assert_eq!(a, b);
            assert_eq!(a, c);
            assert_eq!(a.blocks[0].dst_globals, batch);
            for w in a.blocks.windows(2) {
                assert_eq!(w[0].src_globals, w[1].dst_globals);
            }
            assert_eq!(a.input_nodes, a.blocks[2].src_globals);
            for b in &a.blocks {
                assert!(b.global_edges().all(|(u, v)| g.has_edge(u, v)));
            }
        }
    }

    #[test]
    fn empty_batch_rejected() {
        let plan = FanoutPlan::new(vec![1]).unwrap();
        let r = sample_minibatch(
            &g1(),
            &[],
            &plan,
            &SamplerRng::new(1),
            Kernel::Fused,
            false,
            &mut SamplerScratch::new(),
        );
        assert!(matches!(r, Err(Error::Parameter(_))));
    }

    #[test]
    fn batches_partition_a_permutation() {
        let labels = LabelSet::new((0..10).collect(), 10).unwrap();
        let rng = SamplerRng::new(8);
        let batches = seed_batches(&labels, 4, &rng, 0).unwrap();
        assert_eq!(
            batches.iter().map(Vec::len).collect::<Vec<_>>(),
            vec![4, 4, 2]
        );
        let mut all: Vec<_> = batches.concat();
        all.sort_unstable();
        assert_eq!(all, labels.nodes());
        assert_eq!(batches, seed_batches(&labels, 4, &rng, 0).unwrap());
        assert_ne!(batches, seed_batches(&labels, 4, &rng, 1).unwrap());

        let one = seed_batches(&labels, 10, &rng, 3).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(seed_batches(&labels, 50, &rng, 3).unwrap().len(), 1);
    }

    #[test]
    fn batch_errors() {
        let rng = SamplerRng::new(8);
        assert!(seed_batches(&LabelSet::default(), 4, &rng, 0).is_err());
        assert!(seed_batches(&LabelSet::all(3), 0, &rng, 0).is_err());
    }

    #[test]
    fn kernel_names() {
        assert_eq!("fused".parse::<Kernel>().unwrap(), Kernel::Fused);
        assert_eq!("two-step".parse::<Kernel>().unwrap(), Kernel::TwoStep);
        assert!("dgl".parse::<Kernel>().is_err());
    }
}
