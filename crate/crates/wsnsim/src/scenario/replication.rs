//! Replication batches: independent runs over a list of seeds. Each run
//! owns all of its mutable state, so batches parallelize with rayon when
//! the `parallel` feature is on; a sequential path is always available.

use super::config::ScenarioConfig;
use super::sim::{run_scenario, RunArtifacts, RunError, RunOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExecutionMode {
    Sequential,
    #[cfg(feature = "parallel")]
    Parallel,
}

impl Default for ExecutionMode {
    fn default() -> Self {
        #[cfg(feature = "parallel")]
        {
            ExecutionMode::Parallel
        }
        #[cfg(not(feature = "parallel"))]
        {
            ExecutionMode::Sequential
        }
    }
}

pub struct BatchRun {
    pub seed: u64,
    pub artifacts: RunArtifacts,
}

fn run_one(cfg: &ScenarioConfig, seed: u64, opts: &RunOptions) -> Result<BatchRun, RunError> {
    let mut cfg = cfg.clone();
    cfg.seed = seed;
    run_scenario(&cfg, opts).map(|artifacts| BatchRun { seed, artifacts })
}

/// Runs the scenario once per seed. Results come back in seed order
/// regardless of execution mode.
pub fn run_batch(
    cfg: &ScenarioConfig,
    seeds: &[u64],
    opts: &RunOptions,
    mode: ExecutionMode,
) -> Result<Vec<BatchRun>, RunError> {
    match mode {
        ExecutionMode::Sequential => seeds.iter().map(|&s| run_one(cfg, s, opts)).collect(),
        #[cfg(feature = "parallel")]
        ExecutionMode::Parallel => {
            use rayon::prelude::*;
            seeds.par_iter().map(|&s| run_one(cfg, s, opts)).collect()
        }
    }
}
