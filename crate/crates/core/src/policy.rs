//! The shared Gaussian bidding policy.
//!
//! A job's bid is drawn from N(φᵀθ, σ²), where φ is a feature vector scaled to
//! [0, 1] and σ is a single scalar shared by every job.

use rand::distributions::Open01;
use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::carrier::transport_cost;
use crate::error::{Error, Result};
use crate::market::{InstanceConfig, Job, SystemState};

/// Default lower clamp on σ after an update. Much lower floors let σ drift
/// down until a single update pushes the mean bid into a region where every
/// job fails, from which the gradient never recovers.
pub const SIGMA_FLOOR: f64 = 0.5;

pub const STANDARD_FEATURES: [&str; 8] =
    ["bias", "job_tau", "job_dist", "job_vol", "n_jobs", "avg_dist", "total_vol", "avg_tau"];

pub const CARRIER_COST_FEATURES: [&str; 2] = ["bias", "transport_cost"];

/// Which feature map the policy's mean is linear in.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureSet {
    /// Bias, the bidding job's own attributes and (for sharers) four aggregates
    /// over the sharing population.
    #[default]
    Standard,
    /// Bias and the carrier's transport cost for the job, information jobs
    /// normally cannot observe.
    CarrierCost,
}

impl FeatureSet {
    pub fn names(self) -> &'static [&'static str] {
        match self {
            FeatureSet::Standard => &STANDARD_FEATURES,
            FeatureSet::CarrierCost => &CARRIER_COST_FEATURES,
        }
    }

    pub fn dim(self) -> usize {
        self.names().len()
    }

    /// Recognizes a feature set from its ordered feature names.
    pub fn from_names<S: AsRef<str>>(names: &[S]) -> Option<FeatureSet> {
        [FeatureSet::Standard, FeatureSet::CarrierCost]
            .into_iter()
            .find(|set| set.names().len() == names.len() && set.names().iter().zip(names).all(|(a, b)| *a == b.as_ref()))
    }

    pub fn extract(self, job: &Job, summary: &SharingSummary, cfg: &InstanceConfig) -> FeatureVector {
        match self {
            FeatureSet::Standard => standard_features(job, summary, cfg),
            FeatureSet::CarrierCost => {
                let max_cost = cfg.c_mile * cfg.vol_max as f64 * cfg.dist_max;
                let scaled = if max_cost > 0.0 { transport_cost(job, cfg.c_mile) / max_cost } else { 0.0 };
                FeatureVector(vec![1.0, scaled.clamp(0.0, 1.0)])
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector(pub Vec<f64>);

impl FeatureVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Aggregates over the jobs that share information, computed once per epoch.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SharingSummary {
    pub count: usize,
    pub total_dist: f64,
    pub total_vol: u64,
    pub total_tau: u64,
}

impl SharingSummary {
    pub fn of(state: &SystemState) -> Self {
        state.jobs.iter().filter(|j| j.shares_info).fold(Self::default(), |mut acc, j| {
            acc.count += 1;
            acc.total_dist += j.dist;
            acc.total_vol += j.vol as u64;
            acc.total_tau += j.tau as u64;
            acc
        })
    }
}

fn standard_features(job: &Job, summary: &SharingSummary, cfg: &InstanceConfig) -> FeatureVector {
    let unit = |v: f64| v.clamp(0.0, 1.0);
    let tau_max = cfg.tau_max as f64;
    let mut phi = vec![
        1.0,
        unit(job.tau as f64 / tau_max),
        unit(job.dist / cfg.dist_max),
        unit(job.vol as f64 / cfg.vol_max as f64),
        0.0,
        0.0,
        0.0,
        0.0,
    ];
    if job.shares_info && summary.count > 0 {
        // Worst-case in-flight population: every epoch brings the maximum batch
        // and every job stays until its latest due date.
        let population = (cfg.max_arrivals.max(1) * cfg.tau_max) as f64;
        let n = summary.count as f64;
        phi[4] = unit(n / population);
        phi[5] = unit(summary.total_dist / n / cfg.dist_max);
        phi[6] = unit(summary.total_vol as f64 / (population * cfg.vol_max as f64));
        phi[7] = unit(summary.total_tau as f64 / n / tau_max);
    }
    FeatureVector(phi)
}

/// Standard features of `job` within `state`.
pub fn extract_features(job: &Job, state: &SystemState, cfg: &InstanceConfig) -> FeatureVector {
    standard_features(job, &SharingSummary::of(state), cfg)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyParams {
    pub theta: Vec<f64>,
    pub sigma: f64,
}

impl PolicyParams {
    pub fn new(theta: Vec<f64>, sigma: f64) -> Result<Self> {
        check_sigma(sigma)?;
        Ok(Self { theta, sigma })
    }

    /// All-zero weights, the usual starting point.
    pub fn zeros(set: FeatureSet, sigma: f64) -> Result<Self> {
        Self::new(vec![0.0; set.dim()], sigma)
    }

    pub fn is_finite(&self) -> bool {
        self.sigma.is_finite() && self.theta.iter().all(|w| w.is_finite())
    }
}

fn check_sigma(sigma: f64) -> Result<()> {
    if sigma > 0.0 && sigma.is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositiveSigma(sigma))
    }
}

/// The Gaussian mean φᵀθ.
pub fn mean_bid(phi: &FeatureVector, params: &PolicyParams) -> Result<f64> {
    if phi.len() != params.theta.len() {
        return Err(Error::FeatureLength { expected: params.theta.len(), got: phi.len() });
    }
    Ok(phi.0.iter().zip(&params.theta).map(|(f, w)| f * w).sum())
}

/// Maps a uniform draw through the normal quantile function.
pub fn bid_from_uniform(u: f64, mu: f64, sigma: f64) -> Result<f64> {
    check_sigma(sigma)?;
    let standard = Normal::new(0.0, 1.0).expect("standard normal");
    Ok(mu + sigma * standard.inverse_cdf(u))
}

/// Draws a bid by inverse-transform sampling. Negative bids are legitimate.
pub fn sample_bid<R: Rng + ?Sized>(rng: &mut R, mu: f64, sigma: f64) -> Result<f64> {
    check_sigma(sigma)?;
    let u: f64 = rng.sample(Open01);
    bid_from_uniform(u, mu, sigma)
}

/// ∇θ log N(x; φᵀθ, σ²) = (x − μ)φ / σ².
pub fn grad_log_mu(x: f64, mu: f64, sigma: f64, phi: &FeatureVector) -> Result<Vec<f64>> {
    check_sigma(sigma)?;
    let scale = (x - mu) / (sigma * sigma);
    Ok(phi.0.iter().map(|f| scale * f).collect())
}

/// ∂σ log N(x; μ, σ²) = ((x − μ)² − σ²) / σ³.
pub fn grad_log_sigma(x: f64, mu: f64, sigma: f64) -> Result<f64> {
    check_sigma(sigma)?;
    let d = x - mu;
    Ok((d * d - sigma * sigma) / (sigma * sigma * sigma))
}
