//! The `fsample` command line: dataset generation, partitioning, storage
//! reports, sampling and distributed benchmarks, and verification suites.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage error, 3 I/O or
//! transport error.

pub mod args;
pub mod bench;
pub mod commands;
pub mod error;
pub mod metrics;

pub use commands::run;
pub use error::{CliError, Result};
