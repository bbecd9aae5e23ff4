//! Graph storage, neighborhood sampling, and partitioning for minibatch GNN
//! training.
//!
//! Graphs are stored destination-indexed ([`graph::CscGraph`]): row `v` lists
//! the in-neighbors of `v`, which is the access pattern sampling needs. The
//! [`sampler`] builds message-flow blocks level by level with either the
//! fused kernel or the conventional two-step COO path; both are
//! deterministic in `(graph, seeds, plan, seed)` alone.

pub mod error;
pub mod features;
pub mod generate;
pub mod graph;
pub mod io;
pub mod partition;
pub mod sampler;
pub mod verify;

pub use error::{Error, FormatError, Result};
pub use features::{FeatureMatrix, LabelSet};
pub use graph::{build_csc, csc_to_coo, CooGraph, CscGraph, NodeId};
