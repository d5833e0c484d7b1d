use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("decision vector has {got} entries but the state holds {expected} jobs")]
    DecisionLength { expected: usize, got: usize },

    #[error("standard deviation must be positive, got {0}")]
    NonPositiveSigma(f64),

    #[error("feature vector has {got} entries, policy expects {expected}")]
    FeatureLength { expected: usize, got: usize },

    #[error("trajectory for job {0} is incomplete")]
    IncompleteTrajectory(u64),

    #[error("brute-force selection supports at most {max} entries, got {got}")]
    TooManyEntries { max: usize, got: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid checkpoint: {0}")]
    Checkpoint(String),

    #[error("training diverged at episode {episode}: {detail}")]
    Diverged { episode: usize, detail: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
