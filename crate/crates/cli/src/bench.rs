//! Single-node sampling benchmark: a candidate kernel against the two-step
//! baseline on identical seed batches.

use std::time::Instant;

use fsample_core::features::{FeatureMatrix, LabelSet};
use fsample_core::sampler::{
    sample_minibatch, seed_batches, FanoutPlan, Kernel, MiniBatchSample, SamplerRng, SamplerScratch,
};
use fsample_core::verify::mean_propagate;
use fsample_core::CscGraph;

use crate::error::{CliError, Result};
use crate::metrics::{median, MetricsRecord};

pub const MIN_REPS: usize = 5;
pub const MIN_WARMUPS: usize = 2;

/// 1024, 2048, ..., 10240.
pub fn default_batch_grid() -> Vec<usize> {
    (1..=10).map(|i| i * 1024).collect()
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub plan: FanoutPlan,
    pub batch_sizes: Vec<usize>,
    pub candidate: Kernel,
    pub reps: usize,
    pub warmups: usize,
    pub seed: u64,
    pub include_dst: bool,
}

impl BenchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.reps < MIN_REPS || self.warmups < MIN_WARMUPS {
            return Err(CliError::Usage(format!(
                "need at least {MIN_REPS} repetitions and {MIN_WARMUPS} warmups, got {} and {}",
                self.reps, self.warmups
            )));
        }
        if self.batch_sizes.is_empty() || self.batch_sizes.contains(&0) {
            return Err(CliError::Usage(
                "batch sizes must be nonempty and positive".into(),
            ));
        }
        if self.candidate == Kernel::TwoStep {
            return Err(CliError::Usage(
                "the candidate kernel must differ from the two-step baseline".into(),
            ));
        }
        Ok(())
    }
}

pub fn kernel_name(k: Kernel) -> &'static str {
    match k {
        Kernel::Fused => "fused",
        Kernel::FusedParallel => "fused-par",
        Kernel::TwoStep => "two-step",
    }
}

struct Timed {
    sample_s: Vec<f64>,
    total_s: Vec<f64>,
    coo_buffers: u64,
    last: Option<MiniBatchSample>,
}

fn time_once(
    g: &CscGraph,
    features: Option<&FeatureMatrix>,
    batch: &[u64],
    cfg: &BenchConfig,
    kernel: Kernel,
    scratch: &mut SamplerScratch,
    out: Option<&mut Timed>,
) -> Result<()> {
    let rng = SamplerRng::new(cfg.seed);
    let coo_before = scratch.stats.coo_buffers_allocated;
    let start = Instant::now();
    let sample = sample_minibatch(g, batch, &cfg.plan, &rng, kernel, cfg.include_dst, scratch)?;
    let sample_s = start.elapsed().as_secs_f64();
    if let Some(f) = features {
        let rows = f.gather(&sample.input_nodes);
        std::hint::black_box(mean_propagate(&sample, &rows, f.dim())?);
    }
    let total_s = start.elapsed().as_secs_f64();
    if let Some(t) = out {
        t.sample_s.push(sample_s);
        t.total_s.push(total_s);
        t.coo_buffers = scratch.stats.coo_buffers_allocated - coo_before;
        t.last = Some(sample);
    }
    Ok(())
}

/// Two records per batch size: the baseline, then the candidate with its
/// speedup. With `features`, total time adds the feature lookup and the
/// propagation stand-in. Fails with a verification error if the kernels
/// ever disagree.
pub fn run_sample_bench(
    g: &CscGraph,
    features: Option<&FeatureMatrix>,
    cfg: &BenchConfig,
) -> Result<Vec<MetricsRecord>> {
    cfg.validate()?;
    if g.num_nodes() == 0 {
        return Err(CliError::Usage("cannot benchmark an empty graph".into()));
    }
    let all = LabelSet::all(g.num_nodes());
    let rng = SamplerRng::new(cfg.seed);
    let kernels = [Kernel::TwoStep, cfg.candidate];
    let mut scratch: Vec<SamplerScratch> = kernels
        .iter()
        .map(|_| SamplerScratch::for_graph(g.num_nodes()))
        .collect();
    let mut records = Vec::new();
    for (point, &b) in cfg.batch_sizes.iter().enumerate() {
        let batch = seed_batches(&all, b, &rng, point as u64)?.swap_remove(0);
        for _ in 0..cfg.warmups {
            for (i, &k) in kernels.iter().enumerate() {
                time_once(g, features, &batch, cfg, k, &mut scratch[i], None)?;
            }
        }
        let mut timed: Vec<Timed> = kernels
            .iter()
            .map(|_| Timed {
                sample_s: vec![],
                total_s: vec![],
                coo_buffers: 0,
                last: None,
            })
            .collect();
        for rep in 0..cfg.reps {
            // alternate which kernel runs first so drift hits both equally
            let order: [usize; 2] = if rep % 2 == 0 { [0, 1] } else { [1, 0] };
            for i in order {
                time_once(
                    g,
                    features,
                    &batch,
                    cfg,
                    kernels[i],
                    &mut scratch[i],
                    Some(&mut timed[i]),
                )?;
            }
        }
        if timed[0].last != timed[1].last {
            return Err(CliError::Verification(format!(
                "{} and two-step sampled different blocks at batch size {b}",
                kernel_name(cfg.candidate)
            )));
        }
        let edges = timed[0].last.as_ref().map_or(0, |s| s.num_edges() as u64);
        let base = median(&timed[0].sample_s);
        for (i, &k) in kernels.iter().enumerate() {
            let sample_time_s = median(&timed[i].sample_s);
            records.push(MetricsRecord {
                scenario: kernel_name(k).into(),
                rank: 0,
                batch_size: batch.len() as u64,
                fanouts: cfg.plan.to_string(),
                reps: cfg.reps as u32,
                sample_time_s,
                total_time_s: median(&timed[i].total_s),
                comm_rounds: 0,
                bytes_sent: 0,
                bytes_received: 0,
                edges,
                coo_buffers: timed[i].coo_buffers,
                speedup: if i == 0 { 1.0 } else { base / sample_time_s },
            });
        }
        log::info!(
            "batch {b}: speedup {:.3}",
            records.last().map_or(0.0, |r| r.speedup)
        );
    }
    Ok(records)
}
