//! Episode simulation and the policy-gradient trainer.

mod bookkeeping;
mod episode;
mod train;

pub use bookkeeping::{compute_updates, finalize_episode, returns_to_go, EpisodeLog, JobTrajectory, Outcome, Step};
pub use episode::{run_episode, EpisodeMetrics};
pub use train::{train, validate, LearnConfig, TraceRow, TrainingTrace, ValidationReport};
