use std::path::PathBuf;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};

use fsample_core::sampler::{FanoutPlan, Kernel};

use crate::metrics::OutputFormat;

#[derive(Debug, Parser)]
#[command(
    name = "fsample",
    version,
    about = "Graph sampling, partitioning and distributed minibatch benchmarks"
)]
pub struct Cli {
    /// Seed for every generator and sampler.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic graph, optionally with labels and features.
    Generate(GenerateArgs),
    /// Write a random feature matrix.
    Features(FeaturesArgs),
    /// Partition a graph and write the map plus per-machine shards.
    Partition(PartitionArgs),
    /// Print the topology-versus-features storage breakdown.
    Report(ReportArgs),
    /// Time a fused kernel against the two-step baseline.
    SampleBench(SampleBenchArgs),
    /// Run one distributed training epoch and report rounds, bytes and times.
    DistBench(DistBenchArgs),
    /// Run a verification suite.
    Verify(VerifyArgs),
}

pub fn parse_plan(s: &str) -> Result<FanoutPlan, String> {
    FanoutPlan::parse(s).map_err(|e| e.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OnOff {
    On,
    Off,
}

impl OnOff {
    pub fn is_on(self) -> bool {
        self == OnOff::On
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KernelArg {
    Fused,
    FusedPar,
    TwoStep,
}

impl From<KernelArg> for Kernel {
    fn from(k: KernelArg) -> Self {
        match k {
            KernelArg::Fused => Kernel::Fused,
            KernelArg::FusedPar => Kernel::FusedParallel,
            KernelArg::TwoStep => Kernel::TwoStep,
        }
    }
}

/// Where a command gets its graph: a file, or an R-MAT graph generated in
/// memory.
#[derive(Debug, Clone, Args)]
pub struct GraphSource {
    /// Binary graph file or text edge list (`src dst` per line).
    #[arg(long, conflicts_with = "rmat_scale")]
    pub graph: Option<PathBuf>,
    /// Generate an R-MAT graph with 2^scale nodes instead of loading one.
    #[arg(long)]
    pub rmat_scale: Option<u32>,
    #[arg(long, default_value_t = 16)]
    pub edge_factor: usize,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("kind").args(["rmat", "er", "two_cliques"])))]
pub struct GenerateArgs {
    /// R-MAT / Kronecker graph (the default).
    #[arg(long)]
    pub rmat: bool,
    /// Erdős–Rényi graph with exactly --edges distinct edges.
    #[arg(long)]
    pub er: bool,
    /// Two disjoint cliques of --clique-size nodes.
    #[arg(long)]
    pub two_cliques: bool,
    #[arg(long, default_value_t = 12)]
    pub scale: u32,
    #[arg(long, default_value_t = 16)]
    pub edge_factor: usize,
    /// Uniform quadrant probabilities instead of (0.57, 0.19, 0.19, 0.05).
    #[arg(long)]
    pub uniform: bool,
    #[arg(long, default_value_t = 1000)]
    pub nodes: usize,
    #[arg(long, default_value_t = 10000)]
    pub edges: usize,
    #[arg(long, default_value_t = 8)]
    pub clique_size: usize,
    /// Drop repeated edges.
    #[arg(long)]
    pub dedup: bool,
    #[arg(long)]
    pub out: PathBuf,
    /// Write a text edge list instead of the binary format.
    #[arg(long)]
    pub text: bool,
    /// Bytes per stored index (4 or 8); default is the narrowest that fits.
    #[arg(long)]
    pub index_width: Option<u8>,
    /// Also write a random labeled-node set here.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(long, default_value_t = 0.1)]
    pub label_fraction: f64,
    /// Also write random features here.
    #[arg(long)]
    pub features: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    pub dim: usize,
}

#[derive(Debug, Args)]
pub struct FeaturesArgs {
    /// Take the node count from this graph.
    #[arg(long, required_unless_present = "nodes")]
    pub graph: Option<PathBuf>,
    #[arg(long)]
    pub nodes: Option<usize>,
    #[arg(long, default_value_t = 100)]
    pub dim: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PartitionMethod {
    Hash,
    Greedy,
    Import,
}

#[derive(Debug, Args)]
pub struct PartitionArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long)]
    pub parts: u32,
    #[arg(long, value_enum, default_value_t = PartitionMethod::Greedy)]
    pub method: PartitionMethod,
    /// Labeled nodes; required by the greedy method.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Map to import (text or binary).
    #[arg(long)]
    pub map: Option<PathBuf>,
    #[arg(long, default_value_t = fsample_core::partition::DEFAULT_SLACK)]
    pub slack: f64,
    /// Feature matrix to shard alongside the topology.
    #[arg(long)]
    pub features: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Write the map in binary form.
    #[arg(long)]
    pub binary: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    Products,
    Papers100m,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Dtype {
    F16,
    F32,
    F64,
}

impl Dtype {
    pub fn bytes(self) -> u64 {
        match self {
            Dtype::F16 => 2,
            Dtype::F32 => 4,
            Dtype::F64 => 8,
        }
    }
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Measure this graph file.
    #[arg(long, conflicts_with = "preset")]
    pub graph: Option<PathBuf>,
    /// Published dataset sizes.
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    #[arg(long)]
    pub nodes: Option<u64>,
    #[arg(long)]
    pub edges: Option<u64>,
    /// Feature width; presets supply their own unless overridden.
    #[arg(long)]
    pub dim: Option<u64>,
    #[arg(long, value_enum, default_value_t = Dtype::F32)]
    pub dtype: Dtype,
    /// Bytes per topology index.
    #[arg(long, default_value_t = 4)]
    pub index_width: u64,
    /// Also write the rows as JSON here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SampleBenchArgs {
    #[command(flatten)]
    pub source: GraphSource,
    /// Fanouts from the top level down, e.g. 15,10,5 (the first applies to the seeds).
    #[arg(long, default_value = "15,10,5", value_parser = parse_plan)]
    pub fanouts: FanoutPlan,
    /// Default: 1024,2048,...,10240.
    #[arg(long, value_delimiter = ',')]
    pub batch_sizes: Vec<usize>,
    /// Kernel compared against the two-step baseline.
    #[arg(long, value_enum, default_value_t = KernelArg::Fused)]
    pub kernel: KernelArg,
    #[arg(long, default_value_t = 5)]
    pub reps: usize,
    #[arg(long, default_value_t = 2)]
    pub warmups: usize,
    #[arg(long, value_enum, default_value_t = OnOff::On)]
    pub include_dst: OnOff,
    /// Feature width for the total-time measurement; 0 times sampling only.
    #[arg(long, default_value_t = 32)]
    pub dim: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Output format; defaults from the --out extension.
    #[arg(long, value_enum)]
    pub format: Option<OutputFormat>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Full,
    Hybrid,
}

impl From<ModeArg> for fsample_dist::Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Full => fsample_dist::Mode::Full,
            ModeArg::Hybrid => fsample_dist::Mode::Hybrid,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TransportArg {
    Inproc,
    Tcp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PartitionerArg {
    Hash,
    Greedy,
}

#[derive(Debug, Args)]
pub struct DistBenchArgs {
    #[command(flatten)]
    pub source: GraphSource,
    /// Feature matrix; random features of width --dim otherwise.
    #[arg(long)]
    pub features: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    pub dim: usize,
    /// Labeled nodes; a random --label-fraction otherwise.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(long, default_value_t = 0.1)]
    pub label_fraction: f64,
    #[arg(long, default_value_t = 2)]
    pub workers: u32,
    /// Partition map to use instead of computing one.
    #[arg(long)]
    pub map: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = PartitionerArg::Greedy)]
    pub partitioner: PartitionerArg,
    #[arg(long, value_enum, default_value_t = ModeArg::Hybrid)]
    pub mode: ModeArg,
    #[arg(long, value_enum, default_value_t = KernelArg::Fused)]
    pub kernel: KernelArg,
    /// Run full+two-step, hybrid+two-step and hybrid+fused in turn (inproc only).
    #[arg(long)]
    pub compare: bool,
    /// Fanouts from the top level down.
    #[arg(long, default_value = "15,10,5", value_parser = parse_plan)]
    pub fanouts: FanoutPlan,
    /// Seeds per minibatch per machine.
    #[arg(long, default_value_t = 1000)]
    pub batch_size: usize,
    #[arg(long, value_enum, default_value_t = TransportArg::Inproc)]
    pub transport: TransportArg,
    /// This process's rank (tcp transport).
    #[arg(long)]
    pub rank: Option<u32>,
    /// host:port of every rank in rank order (tcp transport).
    #[arg(long, value_delimiter = ',')]
    pub peers: Vec<String>,
    #[arg(long, value_enum, default_value_t = OnOff::On)]
    pub include_dst: OnOff,
    #[arg(long, default_value_t = 0)]
    pub epoch: u64,
    /// Seconds to wait for a peer before failing.
    #[arg(long, default_value_t = 120)]
    pub timeout: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<OutputFormat>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(subcommand)]
    pub suite: Suite,
}

#[derive(Debug, Subcommand)]
pub enum Suite {
    /// Fused, parallel fused and two-step kernels on random graphs.
    Kernel {
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, default_value_t = 200)]
        max_nodes: usize,
        #[arg(long, default_value_t = 16)]
        max_fanout: usize,
    },
    /// A distributed epoch against the single-process pipeline.
    Dist {
        #[arg(long, default_value_t = 4)]
        workers: u32,
        #[arg(long, value_enum, default_value_t = ModeArg::Hybrid)]
        mode: ModeArg,
        #[arg(long, value_enum, default_value_t = KernelArg::Fused)]
        kernel: KernelArg,
        /// R-MAT scale of the test graph.
        #[arg(long, default_value_t = 12)]
        scale: u32,
        #[arg(long, default_value = "15,10,5", value_parser = parse_plan)]
        fanouts: FanoutPlan,
        #[arg(long, default_value_t = 100)]
        batch_size: usize,
        #[arg(long, value_enum, default_value_t = OnOff::On)]
        include_dst: OnOff,
    },
}
