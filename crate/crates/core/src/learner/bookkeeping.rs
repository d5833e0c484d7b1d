//! Trajectories of completed jobs, returns-to-go, per-due-date observation
//! counts and baselines, and the REINFORCE parameter increments.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::policy::{grad_log_mu, grad_log_sigma, FeatureVector, PolicyParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Shipped,
    Failed,
}

/// One bid placed by a job.
#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub tau: u32,
    pub features: FeatureVector,
    pub bid: f64,
    /// Policy mean when the bid was drawn.
    pub mu: f64,
    pub reward: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JobTrajectory {
    pub job_id: u64,
    pub steps: Vec<Step>,
    /// `None` while the job is still in the market.
    pub outcome: Option<Outcome>,
}

impl JobTrajectory {
    pub fn new(job_id: u64) -> Self {
        Self { job_id, steps: Vec::new(), outcome: None }
    }

    pub fn is_complete(&self) -> bool {
        self.outcome.is_some() && !self.steps.is_empty()
    }

    pub fn total_reward(&self) -> f64 {
        self.steps.iter().map(|s| s.reward).sum()
    }
}

/// Reward accumulated from each step through completion, keyed by the step's
/// time till due date.
pub fn returns_to_go(traj: &JobTrajectory) -> Result<BTreeMap<u32, f64>> {
    if !traj.is_complete() {
        return Err(Error::IncompleteTrajectory(traj.job_id));
    }
    let mut out = BTreeMap::new();
    let mut acc = 0.0;
    for step in traj.steps.iter().rev() {
        acc += step.reward;
        out.insert(step.tau, acc);
    }
    Ok(out)
}

/// Everything the policy update needs from one episode.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EpisodeLog {
    pub trajectories: Vec<JobTrajectory>,
    /// `counts[t]`: completed jobs that bid with `t` epochs left.
    pub counts: Vec<u32>,
    /// Return-to-go per trajectory, aligned with its steps.
    pub returns: Vec<Vec<f64>>,
    /// Mean return-to-go per due-date bucket; `None` for empty buckets.
    pub baselines: Vec<Option<f64>>,
}

pub fn finalize_episode(trajectories: Vec<JobTrajectory>, tau_max: u32) -> Result<EpisodeLog> {
    let buckets = tau_max as usize + 1;
    let mut counts = vec![0u32; buckets];
    let mut sums = vec![0.0f64; buckets];
    let mut returns = Vec::with_capacity(trajectories.len());
    for traj in &trajectories {
        let rtg = returns_to_go(traj)?;
        let per_step: Vec<f64> = traj.steps.iter().map(|s| rtg[&s.tau]).collect();
        for (step, v) in traj.steps.iter().zip(&per_step) {
            let t = step.tau as usize;
            if t >= buckets {
                return Err(Error::Config(format!("step with tau {} exceeds tau_max {tau_max}", step.tau)));
            }
            counts[t] += 1;
            sums[t] += v;
        }
        returns.push(per_step);
    }
    let baselines = counts.iter().zip(&sums).map(|(&k, &s)| (k > 0).then(|| s / k as f64)).collect();
    Ok(EpisodeLog { trajectories, counts, returns, baselines })
}

/// Summed REINFORCE increments for θ and σ over every observed step, each
/// weighted by 1/K for its due-date bucket and centred by that bucket's
/// baseline. Uses the means stored at decision time.
pub fn compute_updates(log: &EpisodeLog, params: &PolicyParams, alpha_mu: f64, alpha_sigma: f64) -> Result<(Vec<f64>, f64)> {
    let mut delta_theta = vec![0.0; params.theta.len()];
    let mut delta_sigma = 0.0;
    for (traj, rets) in log.trajectories.iter().zip(&log.returns) {
        for (step, &ret) in traj.steps.iter().zip(rets) {
            let t = step.tau as usize;
            let (Some(&count), Some(&Some(baseline))) = (log.counts.get(t), log.baselines.get(t)) else {
                continue;
            };
            if count == 0 {
                continue;
            }
            let weight = (ret - baseline) / count as f64;
            let g_mu = grad_log_mu(step.bid, step.mu, params.sigma, &step.features)?;
            if g_mu.len() != delta_theta.len() {
                return Err(Error::FeatureLength { expected: delta_theta.len(), got: g_mu.len() });
            }
            for (d, g) in delta_theta.iter_mut().zip(g_mu) {
                *d += alpha_mu * weight * g;
            }
            delta_sigma += alpha_sigma * weight * grad_log_sigma(step.bid, step.mu, params.sigma)?;
        }
    }
    Ok((delta_theta, delta_sigma))
}
