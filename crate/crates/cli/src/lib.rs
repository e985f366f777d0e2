//! Pipeline orchestration behind the `kpa` binary: configuration and the
//! file-to-file stages `pairs`, `score`, `graph`, `partition` and `eval`.

pub mod config;
pub mod stages;

pub use config::{PartitionSettings, PipelineConfig, SubgraphCount};
pub use stages::{run_pipeline, PipelineSummary};
