//! Reference computations for checking the sampling pipeline end to end.
//!
//! `mean_propagate` is a parameter-free stand-in for GNN layers: each
//! destination takes the mean of its sampled sources (and itself, when the
//! block carries destinations among its sources). Sums run in `f64` in a
//! fixed order and are rounded to `f32` once, so equal samples with equal
//! inputs give bit-equal outputs.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::generate::generate_erdos_renyi;
use crate::graph::{build_csc, NodeId};
use crate::sampler::{
    sample_minibatch, stream_key, FanoutPlan, Kernel, MiniBatchSample, SamplerRng, SamplerScratch,
};

/// Output rows aligned to the sample's seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct PropagationResult {
    pub nodes: Vec<NodeId>,
    pub dim: usize,
    pub data: Vec<f32>,
}

impl PropagationResult {
    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn bit_eq(&self, other: &Self) -> bool {
        self.nodes == other.nodes
            && self.dim == other.dim
            && self.data.len() == other.data.len()
            && self
                .data
                .iter()
                .zip(&other.data)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        if self.data.len() != other.data.len() {
            return f64::INFINITY;
        }
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (*a as f64 - *b as f64).abs())
            .fold(0.0, f64::max)
    }
}

/// Mean aggregation from the deepest block up. `input_rows` is row-major,
/// one row of width `dim` per entry of `sample.input_nodes`.
///
/// Per destination the accumulation order is: its own previous vector (only
/// when the block includes destinations), then its sampled sources in
/// stored order. A destination with nothing to average gets zeros.
pub fn mean_propagate(
    sample: &MiniBatchSample,
    input_rows: &[f32],
    dim: usize,
) -> Result<PropagationResult> {
    if input_rows.len() != sample.input_nodes.len() * dim {
        return Err(Error::Contract(format!(
            "{} input values for {} nodes of width {dim}",
            input_rows.len(),
            sample.input_nodes.len()
        )));
    }
    let mut h = input_rows.to_vec();
    let mut acc = vec![0f64; dim];
    for block in sample.blocks.iter().rev() {
        if h.len() != block.src_globals.len() * dim {
            return Err(Error::Contract(
                "block sources do not line up with the level below".into(),
            ));
        }
        let rows = block.dst_globals.len();
        let mut next = vec![0f32; rows * dim];
        for i in 0..rows {
            acc.iter_mut().for_each(|a| *a = 0.0);
            let mut count = 0usize;
            let own = block.include_dst.then_some(i as NodeId);
            for s in own.into_iter().chain(block.block.row(i).iter().copied()) {
                let src = &h[s as usize * dim..(s as usize + 1) * dim];
                for (a, &x) in acc.iter_mut().zip(src) {
                    *a += x as f64;
                }
                count += 1;
            }
            if count > 0 {
                for (o, a) in next[i * dim..(i + 1) * dim].iter_mut().zip(&acc) {
                    *o = (a / count as f64) as f32;
                }
            }
        }
        h = next;
    }
    Ok(PropagationResult {
        nodes: sample.seeds().to_vec(),
        dim,
        data: h,
    })
}

#[derive(Debug, Clone)]
pub struct KernelCheckConfig {
    pub trials: usize,
    pub max_nodes: usize,
    /// Upper bound on `nnz / n^2`.
    pub max_density: f64,
    pub max_fanout: usize,
    pub seed: u64,
}

impl Default for KernelCheckConfig {
    fn default() -> Self {
        Self {
            trials: 200,
            max_nodes: 200,
            max_density: 0.5,
            max_fanout: 16,
            seed: 0,
        }
    }
}

/// One failing instance, reproducible from `trial_seed`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KernelFailure {
    pub trial: usize,
    pub trial_seed: u64,
    pub num_nodes: usize,
    pub nnz: usize,
    pub fanouts: Vec<usize>,
    pub include_dst: bool,
    pub kernel: String,
}

#[derive(Debug, Clone, Default)]
pub struct KernelCheckReport {
    pub trials: usize,
    pub blocks_compared: usize,
    pub edges_compared: usize,
    pub failures: Vec<KernelFailure>,
}

impl KernelCheckReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

const TRIAL_DOMAIN: u64 = 0x7E57;

/// Runs fused, parallel fused and two-step sampling on random graphs and
/// batches and records every instance where the blocks differ.
pub fn check_kernel_equivalence(cfg: &KernelCheckConfig) -> Result<KernelCheckReport> {
    if cfg.trials == 0 {
        return Err(Error::Parameter("trials must be at least 1".into()));
    }
    if cfg.max_nodes == 0 || cfg.max_fanout == 0 || !(0.0..=1.0).contains(&cfg.max_density) {
        return Err(Error::Parameter(
            "node, fanout and density ranges must be nonempty".into(),
        ));
    }
    let mut report = KernelCheckReport {
        trials: cfg.trials,
        ..Default::default()
    };
    let mut scratch = SamplerScratch::new();
    for trial in 0..cfg.trials {
        let trial_seed = stream_key(cfg.seed, TRIAL_DOMAIN, trial as u64);
        let mut rng = SamplerRng::new(trial_seed).aux_rng(TRIAL_DOMAIN, 0);
        let n = rng.gen_range(1..=cfg.max_nodes);
        // cubing skews toward sparse graphs while still reaching the cap
        let density = cfg.max_density * rng.gen::<f64>().powi(3);
        let nnz = ((n * n) as f64 * density) as usize;
        let g = build_csc(&generate_erdos_renyi(n, nnz, trial_seed)?, false)?;
        let mut nodes: Vec<NodeId> = (0..n as NodeId).collect();
        nodes.shuffle(&mut rng);
        nodes.truncate(rng.gen_range(1..=n));
        let levels = rng.gen_range(1..=3);
        let fanouts: Vec<usize> = (0..levels)
            .map(|_| rng.gen_range(1..=cfg.max_fanout))
            .collect();
        let include_dst = rng.gen_bool(0.5);
        let plan = FanoutPlan::new(fanouts.clone())?;
        let sampler = SamplerRng::new(trial_seed);

        let reference = sample_minibatch(
            &g,
            &nodes,
            &plan,
            &sampler,
            Kernel::Fused,
            include_dst,
            &mut scratch,
        )?;
        for kernel in [Kernel::TwoStep, Kernel::FusedParallel] {
            let other = sample_minibatch(
                &g,
                &nodes,
                &plan,
                &sampler,
                kernel,
                include_dst,
                &mut scratch,
            )?;
            report.blocks_compared += reference.blocks.len();
            report.edges_compared += reference.num_edges();
            if other != reference {
                report.failures.push(KernelFailure {
                    trial,
                    trial_seed,
                    num_nodes: n,
                    nnz: g.nnz(),
                    fanouts: fanouts.clone(),
                    include_dst,
                    kernel: format!("{kernel:?}"),
                });
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::FeatureMatrix;
    use crate::graph::fixtures::g1;
    use crate::sampler::fused_sample_level;

    fn one_level(
        seeds: &[NodeId],
        k: usize,
        include_dst: bool,
        rng: SamplerRng,
    ) -> MiniBatchSample {
        let plan = FanoutPlan::new(vec![k]).unwrap();
        sample_minibatch(
            &g1(),
            seeds,
            &plan,
            &rng,
            Kernel::Fused,
            include_dst,
            &mut SamplerScratch::new(),
        )
        .unwrap()
    }

    #[test]
    fn hand_computed_means() {
        let s = one_level(&[2, 0], 2, false, SamplerRng::first_k());
        let f = FeatureMatrix::from_fn(5, 1, |v, _| v as f32);
        let out = mean_propagate(&s, &f.gather(&s.input_nodes), 1).unwrap();
        assert_eq!(out.nodes, vec![2, 0]);
        assert_eq!(out.data, vec![0.5, 1.5]);
    }

    #[test]
    fn include_dst_averages_self() {
        // v=2 sees itself plus {0,1}: (2+0+1)/3; v=0 sees itself plus {1,2}: (0+1+2)/3
        let s = one_level(&[2, 0], 2, true, SamplerRng::first_k());
        let f = FeatureMatrix::from_fn(5, 1, |v, _| v as f32);
        let out = mean_propagate(&s, &f.gather(&s.input_nodes), 1).unwrap();
        assert_eq!(out.data, vec![1.0, 1.0]);
    }

    #[test]
    fn isolated_seed_gets_zeros() {
        let s = one_level(&[3], 4, false, SamplerRng::new(1));
        let out = mean_propagate(&s, &[], 3).unwrap();
        assert_eq!(out.data, vec![0.0; 3]);
    }

    #[test]
    fn constant_features_fixpoint() {
        let g = build_csc(&generate_erdos_renyi(60, 900, 4).unwrap(), false).unwrap();
        let plan = FanoutPlan::new(vec![100, 100]).unwrap();
        let seeds: Vec<NodeId> = (0..60).collect();
        let s = sample_minibatch(
            &g,
            &seeds,
            &plan,
            &SamplerRng::new(3),
            Kernel::Fused,
            false,
            &mut SamplerScratch::new(),
        )
        .unwrap();
        let c = 0.3f32;
        let out = mean_propagate(&s, &vec![c; s.input_nodes.len() * 2], 2).unwrap();
        // a seed has a nonzero output iff both hops reach something
        for i in 0..seeds.len() {
            let reaches = s.blocks[0]
                .block
                .row(i)
                .iter()
                .any(|&j| s.blocks[1].block.in_degree(j as usize) > 0);
            for &x in out.row(i) {
                if reaches {
                    assert!((x - c).abs() <= 1e-6);
                } else {
                    assert_eq!(x, 0.0);
                }
            }
        }
    }

    #[test]
    fn edge_order_changes_at_most_an_ulp() {
        let g = build_csc(&generate_erdos_renyi(80, 3000, 9).unwrap(), false).unwrap();
        let seeds: Vec<NodeId> = (0..40).collect();
        let (mut block, _) = fused_sample_level(
            &g,
            &seeds,
            30,
            &SamplerRng::new(1),
            1,
            false,
            &mut SamplerScratch::new(),
        )
        .unwrap();
        let f = FeatureMatrix::random(80, 4, 2);
        let sample = MiniBatchSample {
            input_nodes: block.src_globals.clone(),
            blocks: vec![block.clone()],
        };
        let base = mean_propagate(&sample, &f.gather(&sample.input_nodes), 4).unwrap();
        let (n_src, indptr, mut indices) = block.block.clone().into_parts();
        for i in 0..seeds.len() {
            indices[indptr[i]..indptr[i + 1]].reverse();
        }
        block.block =
            crate::graph::CscGraph::bipartite(seeds.len(), n_src, indptr, indices).unwrap();
        let shuffled = MiniBatchSample {
            input_nodes: block.src_globals.clone(),
            blocks: vec![block],
        };
        let other = mean_propagate(&shuffled, &f.gather(&shuffled.input_nodes), 4).unwrap();
        for (a, b) in base.data.iter().zip(&other.data) {
            assert!(
                (a.to_bits() as i64 - b.to_bits() as i64).abs() <= 1,
                "{a} vs {b}"
            );
        }
    }

    #[test]
    fn misaligned_rows_rejected() {
        let s = one_level(&[2, 0], 2, false, SamplerRng::first_k());
        assert!(matches!(
            mean_propagate(&s, &[1.0], 1),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn kernel_check_small_run() {
        let cfg = KernelCheckConfig {
            trials: 25,
            seed: 11,
            ..Default::default()
        };
        let report = check_kernel_equivalence(&cfg).unwrap();
        assert!(report.passed(), "{:?}", report.failures);
        assert_eq!(report.trials, 25);
        assert!(report.edges_compared > 0);
        assert!(check_kernel_equivalence(&KernelCheckConfig { trials: 0, ..cfg }).is_err());
    }
}
