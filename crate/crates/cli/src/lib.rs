//! Orchestration behind the `fracgen` binary: run configuration, per-engine
//! train/generate dispatch, the dataset × engine comparison harness and its
//! report bundle.

pub mod commands;
pub mod compare;
pub mod config;
pub mod engines;
pub mod error;
pub mod figures;
pub mod summary;

pub use commands::{run, Cli};
pub use compare::{run_compare, CompareOutcome, PairOutcome, PairStatus};
pub use config::{EngineKind, RunConfig, SizePolicy};
pub use error::CliError;
