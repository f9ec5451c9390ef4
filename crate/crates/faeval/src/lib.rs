//! Filesystem and orchestration layer around `faeval-core`: dataset
//! ingestion, model checkpoints, the attribution cache, hyperparameter
//! grids, sweep execution, statistical reports, and configuration.

mod bytes;
pub mod cache;
pub mod checkpoint;
pub mod config;
pub mod grid;
pub mod heloc;
pub mod report;
pub mod sweep;

pub use faeval_core as core;
