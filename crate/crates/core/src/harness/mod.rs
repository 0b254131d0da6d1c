//! Configuration, scenarios, training, sweeps, manifests and plots.

mod config;
mod episode;
pub mod manifest;
pub mod plot;
pub mod run;
mod sweep;
pub mod train;

pub use config::{default_scenarios, Config, Scenario, SweepSpec, TrainingConfig};
pub use manifest::{FileDigest, Manifest, RunSpec};
pub use run::{rerun, run_fly, run_plot, run_sweep, run_train, run_trim, LoadedAgent, RerunReport};
pub use sweep::{sweep, SweepResult, SweepRow};
pub use episode::{make_env, run_episode, EpisodeLog, EpisodeOutcome, EpisodeSummary, LogRow, Pilot};

use crate::ddpg::{CheckpointError, DdpgError};
use crate::env::EnvError;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Agent(#[from] DdpgError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error at row {row}: {message}")]
    Parse { row: usize, message: String },
    #[error("plot: {0}")]
    Plot(String),
}
