use fsample_core::generate::{generate_rmat, generate_two_cliques, RmatProbs};
use fsample_core::io::{load_features, load_graph, save_features, save_graph, IndexWidth};
use fsample_core::partition::{
    build_feature_shard, build_graph_partition, edge_cut, partition_greedy, partition_hash,
    DEFAULT_SLACK,
};
use fsample_core::sampler::{
    sample_minibatch, seed_batches, FanoutPlan, Kernel, SamplerRng, SamplerScratch,
};
use fsample_core::verify::mean_propagate;
use fsample_core::{build_csc, CscGraph, FeatureMatrix, LabelSet, NodeId};

fn rmat(scale: u32) -> CscGraph {
    build_csc(
        &generate_rmat(scale, 8, RmatProbs::GRAPH500, 3).unwrap(),
        false,
    )
    .unwrap()
}

#[test]
fn saved_graph_and_features_sample_identically() {
    let dir = tempfile::tempdir().unwrap();
    let g = rmat(10);
    let f = FeatureMatrix::random(g.num_nodes(), 8, 1);
    save_graph(dir.path().join("g.bin"), &g, IndexWidth::U64).unwrap();
    save_features(dir.path().join("f.bin"), &f).unwrap();
    let g2 = load_graph(dir.path().join("g.bin")).unwrap();
    let f2 = load_features(dir.path().join("f.bin")).unwrap();

    let plan = FanoutPlan::parse("10,5").unwrap();
    let rng = SamplerRng::new(9);
    let seeds: Vec<NodeId> = (0..64).collect();
    let run = |g: &CscGraph, f: &FeatureMatrix| {
        let s = sample_minibatch(
            g,
            &seeds,
            &plan,
            &rng,
            Kernel::Fused,
            true,
            &mut SamplerScratch::new(),
        )
        .unwrap();
        let out = mean_propagate(&s, &f.gather(&s.input_nodes), f.dim()).unwrap();
        (s, out)
    };
    let (s1, o1) = run(&g, &f);
    let (s2, o2) = run(&g2, &f2);
    assert_eq!(s1, s2);
    assert!(o1.bit_eq(&o2));
}

#[test]
fn kernels_agree_over_an_epoch() {
    let g = rmat(11);
    let labels = LabelSet::random(g.num_nodes(), 0.2, 4).unwrap();
    let plan = FanoutPlan::parse("15,10,5").unwrap();
    let rng = SamplerRng::new(5);
    let mut scratch = SamplerScratch::new();
    for batch in seed_batches(&labels, 100, &rng, 0).unwrap() {
        let fused =
            sample_minibatch(&g, &batch, &plan, &rng, Kernel::Fused, true, &mut scratch).unwrap();
        for kernel in [Kernel::TwoStep, Kernel::FusedParallel] {
            let other =
                sample_minibatch(&g, &batch, &plan, &rng, kernel, true, &mut scratch).unwrap();
            assert_eq!(fused, other, "{kernel:?}");
        }
    }
}

#[test]
fn epoch_batches_cover_labels_once() {
    let labels = LabelSet::random(5000, 0.1, 2).unwrap();
    let rng = SamplerRng::new(1);
    let batches = seed_batches(&labels, 64, &rng, 3).unwrap();
    assert!(batches.iter().all(|b| !b.is_empty() && b.len() <= 64));
    let mut all: Vec<NodeId> = batches.concat();
    all.sort_unstable();
    assert_eq!(all, labels.nodes());
    assert_ne!(batches, seed_batches(&labels, 64, &rng, 4).unwrap());
}

#[test]
fn partitions_reassemble_graph_and_features() {
    let g = rmat(10);
    let f = FeatureMatrix::random(g.num_nodes(), 4, 7);
    let labels = LabelSet::random(g.num_nodes(), 0.1, 7).unwrap();
    for pmap in [
        partition_hash(g.num_nodes(), 3).unwrap(),
        partition_greedy(&g, 3, &labels, DEFAULT_SLACK).unwrap(),
    ] {
        let mut rows_seen = 0;
        for m in 0..3 {
            let part = build_graph_partition(&g, &pmap, m).unwrap();
            let shard = build_feature_shard(&f, &pmap, m).unwrap();
            for &v in &part.owned_nodes {
                assert_eq!(part.in_neighbors(v).unwrap(), g.row(v as usize));
                assert_eq!(shard.lookup(v).unwrap(), f.row(v));
                rows_seen += 1;
            }
        }
        assert_eq!(rows_seen, g.num_nodes());
    }
}

#[test]
fn greedy_separates_cliques_hash_does_not() {
    let g = build_csc(&generate_two_cliques(10), false).unwrap();
    let labels = LabelSet::all(20);
    let greedy = partition_greedy(&g, 2, &labels, DEFAULT_SLACK).unwrap();
    let hash = partition_hash(20, 2).unwrap();
    assert_eq!(edge_cut(&g, &greedy).unwrap(), 0);
    assert!(edge_cut(&g, &hash).unwrap() > 0);
}
