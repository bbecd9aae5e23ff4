use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Read, Write};
use std::net::{SocketAddr, ToSocketAddrs};
use std::path::Path;
use std::sync::Arc;
use std::time::Duration;

use fsample_core::features::{FeatureMatrix, LabelSet};
use fsample_core::generate::{
    generate_erdos_renyi, generate_rmat, generate_two_cliques, RmatProbs,
};
use fsample_core::io::{
    load_features, load_graph, load_labels, read_edgelist_text, save_features, save_graph,
    save_labels, write_edgelist_text, IndexWidth, GRAPH_MAGIC,
};
use fsample_core::partition::{
    build_feature_shard, edge_cut, load_partition_map, partition_greedy, partition_hash,
    save_partition_map, storage_report, PartitionMap, PAPERS100M, PRODUCTS,
};
use fsample_core::sampler::{FanoutPlan, Kernel, SamplerRng};
use fsample_core::verify::{check_kernel_equivalence, KernelCheckConfig};
use fsample_core::{build_csc, csc_to_coo, CscGraph};
use fsample_dist::{
    check_dist_equivalence, collect_summaries, run_epoch, run_inproc, ClusterSpec, DistError,
    EpochSummary, Mode, TcpTransport,
};
use serde::Serialize;

use crate::args::*;
use crate::bench::{default_batch_grid, kernel_name, run_sample_bench, BenchConfig};
use crate::error::{CliError, Result};
use crate::metrics::{print_table, save_records, MetricsRecord, OutputFormat};

pub fn run(cli: Cli) -> Result<()> {
    let seed = cli.seed;
    match cli.command {
        Command::Generate(a) => cmd_generate(&a, seed),
        Command::Features(a) => cmd_features(&a, seed),
        Command::Partition(a) => cmd_partition(&a),
        Command::Report(a) => cmd_report(&a),
        Command::SampleBench(a) => cmd_sample_bench(&a, seed),
        Command::DistBench(a) => cmd_dist_bench(&a, seed),
        Command::Verify(a) => cmd_verify(&a, seed),
    }
}

/// Loads a binary graph, or parses a text edge list when the magic is absent.
pub fn load_graph_any(path: &Path) -> Result<CscGraph> {
    let mut head = [0u8; 4];
    let n = File::open(path)?.read(&mut head)?;
    if n == 4 && head == GRAPH_MAGIC {
        Ok(load_graph(path)?)
    } else {
        let coo = read_edgelist_text(BufReader::new(File::open(path)?), None)?;
        Ok(build_csc(&coo, false)?)
    }
}

fn source_graph(src: &GraphSource, seed: u64) -> Result<CscGraph> {
    match (&src.graph, src.rmat_scale) {
        (Some(p), _) => load_graph_any(p),
        (None, Some(scale)) => Ok(build_csc(
            &generate_rmat(scale, src.edge_factor, RmatProbs::GRAPH500, seed)?,
            false,
        )?),
        (None, None) => Err(CliError::Usage("give --graph or --rmat-scale".into())),
    }
}

fn index_width(w: Option<u8>, g: &CscGraph) -> Result<IndexWidth> {
    match w {
        None => Ok(IndexWidth::fitting(g)),
        Some(b) => IndexWidth::from_bytes(b).map_err(|e| CliError::Usage(e.to_string())),
    }
}

fn cmd_generate(a: &GenerateArgs, seed: u64) -> Result<()> {
    let coo = if a.er {
        generate_erdos_renyi(a.nodes, a.edges, seed)?
    } else if a.two_cliques {
        generate_two_cliques(a.clique_size)
    } else {
        let probs = if a.uniform {
            RmatProbs::UNIFORM
        } else {
            RmatProbs::GRAPH500
        };
        generate_rmat(a.scale, a.edge_factor, probs, seed)?
    };
    let g = build_csc(&coo, a.dedup)?;
    if a.text {
        let mut w = BufWriter::new(File::create(&a.out)?);
        write_edgelist_text(&mut w, &csc_to_coo(&g))?;
        w.flush()?;
    } else {
        save_graph(&a.out, &g, index_width(a.index_width, &g)?)?;
    }
    println!(
        "wrote {} nodes, {} edges to {}",
        g.num_nodes(),
        g.nnz(),
        a.out.display()
    );
    if let Some(p) = &a.labels {
        let labels = LabelSet::random(g.num_nodes(), a.label_fraction, seed)?;
        save_labels(p, &labels)?;
        println!("wrote {} labeled nodes to {}", labels.len(), p.display());
    }
    if let Some(p) = &a.features {
        save_features(p, &FeatureMatrix::random(g.num_nodes(), a.dim, seed))?;
        println!(
            "wrote {}x{} features to {}",
            g.num_nodes(),
            a.dim,
            p.display()
        );
    }
    Ok(())
}

fn cmd_features(a: &FeaturesArgs, seed: u64) -> Result<()> {
    let n = match (&a.graph, a.nodes) {
        (Some(p), _) => load_graph_any(p)?.num_nodes(),
        (None, Some(n)) => n,
        (None, None) => return Err(CliError::Usage("give --graph or --nodes".into())),
    };
    save_features(&a.out, &FeatureMatrix::random(n, a.dim, seed))?;
    println!("wrote {n}x{} features to {}", a.dim, a.out.display());
    Ok(())
}

fn print_balance(g: &CscGraph, pmap: &PartitionMap, labels: Option<&LabelSet>) -> Result<()> {
    let cut = edge_cut(g, pmap)?;
    println!("parts: {}", pmap.num_parts());
    println!(
        "edge cut: {cut} of {} ({:.4})",
        g.nnz(),
        if g.nnz() == 0 {
            0.0
        } else {
            cut as f64 / g.nnz() as f64
        }
    );
    let imbalance = |c: &[usize]| {
        let total: usize = c.iter().sum();
        let max = c.iter().copied().max().unwrap_or(0);
        if total == 0 {
            1.0
        } else {
            max as f64 * c.len() as f64 / total as f64
        }
    };
    let nodes = pmap.node_counts();
    println!(
        "nodes per part: {nodes:?} (max/mean {:.4})",
        imbalance(&nodes)
    );
    if let Some(l) = labels {
        let lc = pmap.label_counts(l);
        println!("labels per part: {lc:?} (max/mean {:.4})", imbalance(&lc));
    }
    Ok(())
}

fn cmd_partition(a: &PartitionArgs) -> Result<()> {
    let g = load_graph_any(&a.graph)?;
    let n = g.num_nodes();
    let labels = a.labels.as_ref().map(|p| load_labels(p, n)).transpose()?;
    let pmap = match a.method {
        PartitionMethod::Hash => partition_hash(n, a.parts)?,
        PartitionMethod::Greedy => {
            let labels = labels
                .as_ref()
                .ok_or_else(|| CliError::Usage("the greedy method needs --labels".into()))?;
            partition_greedy(&g, a.parts, labels, a.slack)?
        }
        PartitionMethod::Import => {
            let path = a
                .map
                .as_ref()
                .ok_or_else(|| CliError::Usage("import needs --map".into()))?;
            load_partition_map(path, n, Some(a.parts))?
        }
    };
    fs::create_dir_all(&a.out)?;
    save_partition_map(a.out.join("partition.map"), &pmap, a.binary)?;
    let features = a.features.as_ref().map(load_features).transpose()?;
    for m in 0..pmap.num_parts() {
        save_labels(
            a.out.join(format!("part-{m}.nodes")),
            &LabelSet::new(pmap.owned_nodes(m), n)?,
        )?;
        if let Some(f) = &features {
            save_features(
                a.out.join(format!("part-{m}.feat")),
                &build_feature_shard(f, &pmap, m)?.to_matrix(),
            )?;
        }
    }
    print_balance(&g, &pmap, labels.as_ref())?;
    println!("wrote partition to {}", a.out.display());
    Ok(())
}

#[derive(Debug, Serialize)]
struct ReportRow {
    name: String,
    num_nodes: u64,
    num_edges: u64,
    feat_dim: u64,
    elem_bytes: u64,
    index_width: u64,
    topology_bytes: u128,
    feature_bytes: u128,
    topology_fraction: f64,
}

fn cmd_report(a: &ReportArgs) -> Result<()> {
    if a.index_width != 4 && a.index_width != 8 {
        return Err(CliError::Usage(format!(
            "index width {} is not 4 or 8",
            a.index_width
        )));
    }
    let mut configs: Vec<(String, u64, u64, Option<u64>)> = Vec::new();
    if let Some(p) = &a.graph {
        let g = load_graph_any(p)?;
        configs.push((
            p.display().to_string(),
            g.num_nodes() as u64,
            g.nnz() as u64,
            None,
        ));
    }
    let presets: &[_] = match a.preset {
        Some(Preset::Products) => &[PRODUCTS],
        Some(Preset::Papers100m) => &[PAPERS100M],
        Some(Preset::All) => &[PRODUCTS, PAPERS100M],
        None => &[],
    };
    for d in presets {
        configs.push((
            d.name.to_string(),
            d.num_nodes,
            d.num_edges,
            Some(d.feat_dim),
        ));
    }
    if configs.is_empty() {
        let (Some(n), Some(e)) = (a.nodes, a.edges) else {
            return Err(CliError::Usage(
                "give --graph, --preset, or --nodes with --edges".into(),
            ));
        };
        configs.push(("custom".into(), n, e, None));
    }
    let mut rows = Vec::new();
    for (name, nodes, edges, preset_dim) in configs {
        let nodes = a.nodes.unwrap_or(nodes);
        let edges = a.edges.unwrap_or(edges);
        let dim = a
            .dim
            .or(preset_dim)
            .ok_or_else(|| CliError::Usage("--dim is required without a preset".into()))?;
        let r = storage_report(nodes, edges, dim, a.dtype.bytes(), a.index_width);
        rows.push(ReportRow {
            name,
            num_nodes: nodes,
            num_edges: edges,
            feat_dim: dim,
            elem_bytes: a.dtype.bytes(),
            index_width: a.index_width,
            topology_bytes: r.topology_bytes,
            feature_bytes: r.feature_bytes,
            topology_fraction: r.topology_fraction,
        });
    }
    println!(
        "{:<20} {:>14} {:>16} {:>6} {:>18} {:>18} {:>10}",
        "dataset", "nodes", "edges", "dim", "topology_B", "features_B", "topo_frac"
    );
    for r in &rows {
        println!(
            "{:<20} {:>14} {:>16} {:>6} {:>18} {:>18} {:>10.4}",
            r.name,
            r.num_nodes,
            r.num_edges,
            r.feat_dim,
            r.topology_bytes,
            r.feature_bytes,
            r.topology_fraction
        );
    }
    if let Some(p) = &a.out {
        let mut w = BufWriter::new(File::create(p)?);
        serde_json::to_writer_pretty(&mut w, &rows)?;
        w.write_all(b"\n")?;
        w.flush()?;
    }
    Ok(())
}

fn emit(records: &[MetricsRecord], out: Option<&Path>, format: Option<OutputFormat>) -> Result<()> {
    print_table(records);
    if let Some(p) = out {
        let format = format.unwrap_or_else(|| OutputFormat::for_path(p));
        save_records(p, records, format)?;
        println!("wrote {} records to {}", records.len(), p.display());
    }
    Ok(())
}

fn cmd_sample_bench(a: &SampleBenchArgs, seed: u64) -> Result<()> {
    let g = source_graph(&a.source, seed)?;
    let cfg = BenchConfig {
        plan: a.fanouts.clone(),
        batch_sizes: if a.batch_sizes.is_empty() {
            default_batch_grid()
        } else {
            a.batch_sizes.clone()
        },
        candidate: a.kernel.into(),
        reps: a.reps,
        warmups: a.warmups,
        seed,
        include_dst: a.include_dst.is_on(),
    };
    cfg.validate()?;
    let features = (a.dim > 0).then(|| FeatureMatrix::random(g.num_nodes(), a.dim, seed));
    println!(
        "graph: {} nodes, {} edges; fanouts {} (top level first)",
        g.num_nodes(),
        g.nnz(),
        cfg.plan
    );
    let records = run_sample_bench(&g, features.as_ref(), &cfg)?;
    emit(&records, a.out.as_deref(), a.format)
}

struct DistInputs {
    graph: Arc<CscGraph>,
    features: Arc<FeatureMatrix>,
    labels: Arc<LabelSet>,
    pmap: Arc<PartitionMap>,
}

fn dist_inputs(a: &DistBenchArgs, seed: u64) -> Result<DistInputs> {
    if a.workers == 0 {
        return Err(CliError::Usage("--workers must be at least 1".into()));
    }
    let g = source_graph(&a.source, seed)?;
    let n = g.num_nodes();
    let features = match &a.features {
        Some(p) => load_features(p)?,
        None => FeatureMatrix::random(n, a.dim, seed),
    };
    if features.num_nodes() != n {
        return Err(CliError::Usage(format!(
            "{} feature rows for {n} nodes",
            features.num_nodes()
        )));
    }
    let labels = match &a.labels {
        Some(p) => load_labels(p, n)?,
        None => LabelSet::random(n, a.label_fraction, seed)?,
    };
    let pmap = match (&a.map, a.partitioner) {
        (Some(p), _) => load_partition_map(p, n, Some(a.workers))?,
        (None, PartitionerArg::Hash) => partition_hash(n, a.workers)?,
        (None, PartitionerArg::Greedy) => partition_greedy(
            &g,
            a.workers,
            &labels,
            fsample_core::partition::DEFAULT_SLACK,
        )?,
    };
    Ok(DistInputs {
        graph: Arc::new(g),
        features: Arc::new(features),
        labels: Arc::new(labels),
        pmap: Arc::new(pmap),
    })
}

fn summary_record(
    scenario: &str,
    s: &EpochSummary,
    a: &DistBenchArgs,
    speedup: f64,
) -> MetricsRecord {
    MetricsRecord {
        scenario: scenario.into(),
        rank: s.rank,
        batch_size: a.batch_size as u64,
        fanouts: a.fanouts.to_string(),
        reps: 1,
        sample_time_s: s.sample_time.as_secs_f64(),
        total_time_s: s.epoch_time.as_secs_f64(),
        comm_rounds: s.max_rounds,
        bytes_sent: s.bytes_sent,
        bytes_received: s.bytes_received,
        edges: s.edges_sampled,
        coo_buffers: s.coo_buffers,
        speedup,
    }
}

fn print_rounds(scenario: &str, summaries: &[EpochSummary]) {
    for s in summaries {
        let rounds = if s.min_rounds == s.max_rounds {
            s.max_rounds.to_string()
        } else {
            format!("{}..{}", s.min_rounds, s.max_rounds)
        };
        println!(
            "{scenario} rank {}: {} minibatches ({} local), rounds per minibatch {rounds}, epoch {:.3}s \
             (sample {:.3}s, gather {:.3}s, compute {:.3}s)",
            s.rank,
            s.num_batches,
            s.local_batches,
            s.epoch_time.as_secs_f64(),
            s.sample_time.as_secs_f64(),
            s.gather_time.as_secs_f64(),
            s.compute_time.as_secs_f64()
        );
    }
}

fn scenario_name(mode: Mode, kernel: Kernel) -> String {
    format!("{mode}+{}", kernel_name(kernel))
}

fn run_inproc_scenario(
    inputs: &DistInputs,
    a: &DistBenchArgs,
    mode: Mode,
    kernel: Kernel,
    seed: u64,
) -> Result<Vec<EpochSummary>> {
    let spec = ClusterSpec {
        graph: Arc::clone(&inputs.graph),
        features: Arc::clone(&inputs.features),
        labels: Arc::clone(&inputs.labels),
        pmap: Arc::clone(&inputs.pmap),
        mode,
        kernel,
        include_dst: a.include_dst.is_on(),
        rng: SamplerRng::new(seed),
        record_outputs: false,
    };
    let per_rank = run_inproc(&spec, Duration::from_secs(a.timeout), |ctx| {
        let m = run_epoch(ctx, &a.fanouts, a.batch_size, a.epoch)?;
        Ok(EpochSummary::of(&m))
    });
    Ok(per_rank
        .into_iter()
        .collect::<std::result::Result<Vec<_>, DistError>>()?)
}

fn resolve_peers(peers: &[String]) -> Result<Vec<SocketAddr>> {
    peers
        .iter()
        .map(|p| {
            p.to_socket_addrs()
                .map_err(|e| CliError::Usage(format!("bad peer address {p:?}: {e}")))?
                .next()
                .ok_or_else(|| CliError::Usage(format!("peer address {p:?} resolves to nothing")))
        })
        .collect()
}

fn cmd_dist_bench(a: &DistBenchArgs, seed: u64) -> Result<()> {
    let mode: Mode = a.mode.into();
    let kernel: Kernel = a.kernel.into();
    match a.transport {
        TransportArg::Inproc => {
            let inputs = dist_inputs(a, seed)?;
            let scenarios: Vec<(Mode, Kernel)> = if a.compare {
                vec![
                    (Mode::Full, Kernel::TwoStep),
                    (Mode::Hybrid, Kernel::TwoStep),
                    (Mode::Hybrid, Kernel::Fused),
                ]
            } else {
                vec![(mode, kernel)]
            };
            let mut records = Vec::new();
            let mut baseline: Option<f64> = None;
            for (mode, kernel) in scenarios {
                let name = scenario_name(mode, kernel);
                let summaries = run_inproc_scenario(&inputs, a, mode, kernel, seed)?;
                print_rounds(&name, &summaries);
                let slowest = summaries
                    .iter()
                    .map(|s| s.epoch_time.as_secs_f64())
                    .fold(0.0, f64::max);
                let base = *baseline.get_or_insert(slowest);
                records.extend(
                    summaries
                        .iter()
                        .map(|s| summary_record(&name, s, a, base / slowest)),
                );
            }
            emit(&records, a.out.as_deref(), a.format)
        }
        TransportArg::Tcp => {
            if a.compare {
                return Err(CliError::Usage(
                    "--compare needs the inproc transport".into(),
                ));
            }
            let rank = a
                .rank
                .ok_or_else(|| CliError::Usage("tcp transport needs --rank".into()))?;
            let peers = resolve_peers(&a.peers)?;
            if peers.len() != a.workers as usize {
                return Err(CliError::Usage(format!(
                    "{} peer addresses for {} workers",
                    peers.len(),
                    a.workers
                )));
            }
            let inputs = dist_inputs(a, seed)?;
            let spec = ClusterSpec {
                graph: inputs.graph,
                features: inputs.features,
                labels: inputs.labels,
                pmap: inputs.pmap,
                mode,
                kernel,
                include_dst: a.include_dst.is_on(),
                rng: SamplerRng::new(seed),
                record_outputs: false,
            };
            let transport = TcpTransport::connect(rank, &peers, Duration::from_secs(a.timeout))
                .map_err(|source| DistError::Transport { rank, source })?;
            let mut ctx = spec.worker(Box::new(transport))?;
            let m = run_epoch(&mut ctx, &a.fanouts, a.batch_size, a.epoch)?;
            let name = scenario_name(mode, kernel);
            match collect_summaries(&mut ctx, &m)? {
                Some(all) => {
                    print_rounds(&name, &all);
                    let records: Vec<_> = all
                        .iter()
                        .map(|s| summary_record(&name, s, a, 1.0))
                        .collect();
                    emit(&records, a.out.as_deref(), a.format)
                }
                None => {
                    print_rounds(&name, &[EpochSummary::of(&m)]);
                    Ok(())
                }
            }
        }
    }
}

/// Graph, labels and partition used by `verify dist`.
pub fn dist_check_spec(
    workers: u32,
    mode: Mode,
    kernel: Kernel,
    scale: u32,
    include_dst: bool,
    seed: u64,
) -> Result<ClusterSpec> {
    let g = build_csc(&generate_rmat(scale, 8, RmatProbs::GRAPH500, seed)?, false)?;
    let n = g.num_nodes();
    let labels = LabelSet::random(n, 0.1, seed)?;
    let pmap = partition_greedy(&g, workers, &labels, fsample_core::partition::DEFAULT_SLACK)?;
    Ok(ClusterSpec {
        graph: Arc::new(g),
        features: Arc::new(FeatureMatrix::random(n, 16, seed)),
        labels: Arc::new(labels),
        pmap: Arc::new(pmap),
        mode,
        kernel,
        include_dst,
        rng: SamplerRng::new(seed),
        record_outputs: true,
    })
}

fn cmd_verify(a: &VerifyArgs, seed: u64) -> Result<()> {
    match &a.suite {
        Suite::Kernel {
            trials,
            max_nodes,
            max_fanout,
        } => {
            let cfg = KernelCheckConfig {
                trials: *trials,
                max_nodes: *max_nodes,
                max_fanout: *max_fanout,
                seed,
                ..Default::default()
            };
            let r = check_kernel_equivalence(&cfg)?;
            println!(
                "kernel: {} trials, {} blocks, {} edges compared, {} failures",
                r.trials,
                r.blocks_compared,
                r.edges_compared,
                r.failures.len()
            );
            for f in &r.failures {
                println!(
                    "  trial {} (seed {:#x}): n={} nnz={} fanouts={:?} include_dst={} kernel={}",
                    f.trial, f.trial_seed, f.num_nodes, f.nnz, f.fanouts, f.include_dst, f.kernel
                );
            }
            if r.passed() {
                Ok(())
            } else {
                Err(CliError::Verification(format!(
                    "{} kernel mismatches",
                    r.failures.len()
                )))
            }
        }
        Suite::Dist {
            workers,
            mode,
            kernel,
            scale,
            fanouts,
            batch_size,
            include_dst,
        } => {
            let mode: Mode = (*mode).into();
            if *workers == 0 {
                return Err(CliError::Usage("--workers must be at least 1".into()));
            }
            let spec = dist_check_spec(
                *workers,
                mode,
                (*kernel).into(),
                *scale,
                include_dst.is_on(),
                seed,
            )?;
            let r = check_dist_equivalence(
                &spec,
                fanouts,
                *batch_size,
                0,
                fsample_dist::DEFAULT_TIMEOUT,
            )?;
            let expected = expected_rounds(mode, fanouts);
            let rounds_ok = r.rounds.iter().flatten().all(|&x| x == expected);
            println!(
                "dist: P={workers} {mode}: {} batches, blocks equal {}, outputs equal {}, max |diff| {:e}, rounds per minibatch {} (expected {expected})",
                r.batches_compared,
                r.blocks_equal,
                r.outputs_equal,
                r.max_abs_diff,
                if rounds_ok { expected.to_string() } else { format!("{:?}", r.rounds) }
            );
            if r.passed() && rounds_ok {
                Ok(())
            } else {
                Err(CliError::Verification(
                    "distributed run differs from the single-process pipeline".into(),
                ))
            }
        }
    }
}

/// Collective rounds per minibatch: 2 in hybrid mode, 2L in full mode.
pub fn expected_rounds(mode: Mode, plan: &FanoutPlan) -> u64 {
    match mode {
        Mode::Hybrid => 2,
        Mode::Full => 2 * plan.num_levels() as u64,
    }
}
