use serde::{Deserialize, Serialize};

use super::bookkeeping::compute_updates;
use super::episode::{run_episode, EpisodeMetrics};
use crate::error::{Error, Result};
use crate::market::InstanceConfig;
use crate::policy::{FeatureSet, PolicyParams, SIGMA_FLOOR};
use crate::rng::{Purpose, Streams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LearnConfig {
    pub episodes: u32,
    pub horizon: u32,
    pub alpha_mu: f64,
    pub alpha_sigma: f64,
    pub sigma0: f64,
    /// Initial weights; `None` starts from zeros.
    pub theta0: Option<Vec<f64>>,
    /// Fraction of training between validation points; 0 disables validation.
    pub validation_every: f64,
    pub validation_episodes: u32,
    pub validation_horizon: u32,
    pub seed: u64,
    pub features: FeatureSet,
    /// Lower clamp applied to σ after every update.
    pub sigma_floor: f64,
}

impl Default for LearnConfig {
    fn default() -> Self {
        Self {
            episodes: 4000,
            horizon: 100,
            alpha_mu: 0.1,
            alpha_sigma: 0.01,
            sigma0: 10.0,
            theta0: None,
            validation_every: 0.1,
            validation_episodes: 10,
            validation_horizon: 1000,
            seed: 0,
            features: FeatureSet::Standard,
            sigma_floor: SIGMA_FLOOR,
        }
    }
}

impl LearnConfig {
    pub fn validate(&self) -> Result<()> {
        fn bad(field: &str, msg: impl std::fmt::Display) -> Error {
            Error::Config(format!("{field}: {msg}"))
        }
        if self.episodes < 1 {
            return Err(bad("episodes", "must be at least 1"));
        }
        if self.horizon < 1 {
            return Err(bad("horizon", "must be at least 1"));
        }
        for (field, rate) in [("alpha_mu", self.alpha_mu), ("alpha_sigma", self.alpha_sigma)] {
            if !(rate > 0.0 && rate < 1.0) {
                return Err(bad(field, format!("must lie in (0, 1), got {rate}")));
            }
        }
        if !(self.sigma_floor > 0.0 && self.sigma_floor.is_finite()) {
            return Err(bad("sigma_floor", format!("must be positive, got {}", self.sigma_floor)));
        }
        if !(self.sigma0 > 0.0 && self.sigma0.is_finite()) {
            return Err(bad("sigma0", format!("must be positive, got {}", self.sigma0)));
        }
        if self.sigma0 < self.sigma_floor {
            return Err(bad("sigma0", format!("must not be below sigma_floor ({})", self.sigma_floor)));
        }
        if let Some(theta) = &self.theta0 {
            if theta.len() != self.features.dim() {
                return Err(bad("theta0", format!("expected {} weights, got {}", self.features.dim(), theta.len())));
            }
            if theta.iter().any(|w| !w.is_finite()) {
                return Err(bad("theta0", "weights must be finite"));
            }
        }
        if !(0.0..=1.0).contains(&self.validation_every) {
            return Err(bad("validation_every", format!("must lie in [0, 1], got {}", self.validation_every)));
        }
        if self.validation_horizon < 1 {
            return Err(bad("validation_horizon", "must be at least 1"));
        }
        Ok(())
    }

    pub fn initial_params(&self) -> Result<PolicyParams> {
        let theta = self.theta0.clone().unwrap_or_else(|| vec![0.0; self.features.dim()]);
        PolicyParams::new(theta, self.sigma0)
    }

    /// Episodes between validation points, if validation is enabled.
    pub fn validation_interval(&self) -> Option<u32> {
        if self.validation_every <= 0.0 || self.validation_episodes == 0 {
            return None;
        }
        Some(((self.episodes as f64 * self.validation_every).round() as u32).max(1))
    }
}

/// Pooled result of evaluating a frozen policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub episodes: Vec<EpisodeMetrics>,
    pub pooled: EpisodeMetrics,
}

impl ValidationReport {
    /// Average cost per completed job (the negated average reward).
    pub fn avg_cost(&self) -> Option<f64> {
        self.pooled.avg_reward_per_completed_job().map(|r| -r)
    }
}

/// Runs `episodes` episodes with frozen parameters and stochastic bids. Every
/// call with the same seed sees the same demand.
pub fn validate(
    params: &PolicyParams,
    features: FeatureSet,
    cfg: &InstanceConfig,
    episodes: u32,
    horizon: u32,
    seed: u64,
) -> Result<ValidationReport> {
    let mut streams = Streams::new(seed, Purpose::Validation);
    let mut pooled = EpisodeMetrics::default();
    let mut per_episode = Vec::with_capacity(episodes as usize);
    for _ in 0..episodes {
        let (_, metrics) = run_episode(params, features, cfg, horizon, &mut streams)?;
        pooled.merge(&metrics);
        per_episode.push(metrics);
    }
    Ok(ValidationReport { episodes: per_episode, pooled })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub episode: u32,
    /// Parameters after this episode's update.
    pub sigma: f64,
    pub theta: Vec<f64>,
    pub metrics: EpisodeMetrics,
    pub validation_avg_cost: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingTrace {
    pub features: FeatureSet,
    pub rows: Vec<TraceRow>,
}

impl TrainingTrace {
    pub fn validation_costs(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.rows.iter().filter_map(|r| r.validation_avg_cost.map(|c| (r.episode, c)))
    }
}

/// Trains the shared policy: one batch update per episode, σ clamped to the
/// configured floor, periodic validation with frozen parameters.
pub fn train(learn: &LearnConfig, inst: &InstanceConfig) -> Result<(PolicyParams, TrainingTrace)> {
    learn.validate()?;
    inst.validate()?;
    let mut params = learn.initial_params()?;
    let mut streams = Streams::new(learn.seed, Purpose::Training);
    let interval = learn.validation_interval();
    let mut trace = TrainingTrace { features: learn.features, rows: Vec::with_capacity(learn.episodes as usize) };

    for episode in 0..learn.episodes {
        let (log, metrics) = run_episode(&params, learn.features, inst, learn.horizon, &mut streams)?;
        let (delta_theta, delta_sigma) = compute_updates(&log, &params, learn.alpha_mu, learn.alpha_sigma)?;
        for (w, d) in params.theta.iter_mut().zip(&delta_theta) {
            *w += d;
        }
        let sigma = params.sigma + delta_sigma;
        if !sigma.is_finite() || params.theta.iter().any(|w| !w.is_finite()) {
            return Err(Error::Diverged {
                episode: episode as usize,
                detail: format!("non-finite parameters (sigma {sigma}, theta {:?})", params.theta),
            });
        }
        params.sigma = sigma.max(learn.sigma_floor);

        let validation_avg_cost = match interval {
            Some(k) if (episode + 1) % k == 0 => validate(
                &params,
                learn.features,
                inst,
                learn.validation_episodes,
                learn.validation_horizon,
                learn.seed,
            )?
            .avg_cost(),
            _ => None,
        };
        trace.rows.push(TraceRow {
            episode,
            sigma: params.sigma,
            theta: params.theta.clone(),
            metrics,
            validation_avg_cost,
        });
    }
    Ok((params, trace))
}
