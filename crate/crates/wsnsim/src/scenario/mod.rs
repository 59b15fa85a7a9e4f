//! Configuration loading, scenario presets, run orchestration, and file
//! outputs.

pub mod config;
pub mod output;
pub mod preset;
pub mod replication;
pub mod sim;

pub use config::{ConfigError, NodeConfig, Role, ScenarioConfig};
pub use replication::{run_batch, BatchRun, ExecutionMode};
pub use sim::{
    run_scenario, FrameRecord, RssiLogRecord, RunArtifacts, RunError, RunOptions, RunSummary,
    SimError,
};
