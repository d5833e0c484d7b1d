use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::bookkeeping::{finalize_episode, EpisodeLog, JobTrajectory, Outcome, Step};
use crate::carrier::{select_jobs, transport_cost, BidSheet};
use crate::error::Result;
use crate::market::{direct_reward, generate_arrivals, transition, InstanceConfig, SystemState};
use crate::policy::{mean_bid, sample_bid, FeatureSet, PolicyParams, SharingSummary};
use crate::rng::Streams;

/// Raw per-episode tallies. Ratios are derived on demand so tallies from
/// several episodes can be pooled with [`EpisodeMetrics::merge`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EpisodeMetrics {
    pub epochs: u64,
    pub completed: u64,
    pub shipped: u64,
    pub failed: u64,
    /// Bids placed by jobs that completed.
    pub completed_bids: u64,
    /// Sum of all rewards collected by completed jobs.
    pub completed_reward: f64,
    /// Sum of accepted bids.
    pub revenue: f64,
    /// Carrier transport costs of shipped jobs.
    pub transport_cost: f64,
}

impl EpisodeMetrics {
    pub fn merge(&mut self, other: &EpisodeMetrics) {
        self.epochs += other.epochs;
        self.completed += other.completed;
        self.shipped += other.shipped;
        self.failed += other.failed;
        self.completed_bids += other.completed_bids;
        self.completed_reward += other.completed_reward;
        self.revenue += other.revenue;
        self.transport_cost += other.transport_cost;
    }

    fn per_completed(&self, v: f64) -> Option<f64> {
        (self.completed > 0).then(|| v / self.completed as f64)
    }

    pub fn avg_reward_per_completed_job(&self) -> Option<f64> {
        self.per_completed(self.completed_reward)
    }

    pub fn shipped_fraction(&self) -> Option<f64> {
        self.per_completed(self.shipped as f64)
    }

    pub fn failed_fraction(&self) -> Option<f64> {
        self.per_completed(self.failed as f64)
    }

    pub fn avg_bids_per_job(&self) -> Option<f64> {
        self.per_completed(self.completed_bids as f64)
    }

    /// (revenue − transport cost) / revenue.
    pub fn carrier_profit_margin(&self) -> Option<f64> {
        (self.revenue > 0.0).then(|| (self.revenue - self.transport_cost) / self.revenue)
    }

    pub fn mean_accepted_bid(&self) -> Option<f64> {
        (self.shipped > 0).then(|| self.revenue / self.shipped as f64)
    }

    pub fn carrier_profit_per_epoch(&self) -> Option<f64> {
        (self.epochs > 0).then(|| (self.revenue - self.transport_cost) / self.epochs as f64)
    }
}

/// Simulates `horizon` epochs under a frozen policy.
///
/// Each epoch every job in the market bids, the carrier selects, rewards are
/// recorded, completed jobs are collected, and the market transitions with a
/// fresh arrival batch. Jobs still in the market at the end are dropped.
pub fn run_episode(
    params: &PolicyParams,
    features: FeatureSet,
    cfg: &InstanceConfig,
    horizon: u32,
    streams: &mut Streams,
) -> Result<(EpisodeLog, EpisodeMetrics)> {
    let mut state = SystemState::new(0, generate_arrivals(&mut streams.arrivals, &mut streams.sharing, cfg, 0));
    let mut next_id = state.len() as u64;
    let mut open: HashMap<u64, JobTrajectory> = HashMap::new();
    let mut completed = Vec::new();
    let mut metrics = EpisodeMetrics::default();

    for _ in 0..horizon {
        let summary = SharingSummary::of(&state);
        let mut phis = Vec::with_capacity(state.len());
        let mut mus = Vec::with_capacity(state.len());
        let mut bids = Vec::with_capacity(state.len());
        for job in &state.jobs {
            let phi = features.extract(job, &summary, cfg);
            let mu = mean_bid(&phi, params)?;
            bids.push(sample_bid(&mut streams.bids, mu, params.sigma)?);
            mus.push(mu);
            phis.push(phi);
        }

        let selection = select_jobs(&BidSheet::new(&state.jobs, &bids, cfg.c_mile), cfg.capacity);

        for (i, job) in state.jobs.iter().enumerate() {
            let accepted = selection.decisions[i];
            let reward = direct_reward(job, accepted, bids[i], cfg);
            let traj = open.entry(job.id).or_insert_with(|| JobTrajectory::new(job.id));
            traj.steps.push(Step { tau: job.tau, features: phis[i].clone(), bid: bids[i], mu: mus[i], reward });
            let outcome = if accepted {
                metrics.revenue += bids[i];
                metrics.transport_cost += transport_cost(job, cfg.c_mile);
                Some(Outcome::Shipped)
            } else if job.tau == 0 {
                Some(Outcome::Failed)
            } else {
                None
            };
            if let Some(outcome) = outcome {
                let mut traj = open.remove(&job.id).expect("trajectory just inserted");
                traj.outcome = Some(outcome);
                metrics.completed += 1;
                match outcome {
                    Outcome::Shipped => metrics.shipped += 1,
                    Outcome::Failed => metrics.failed += 1,
                }
                metrics.completed_bids += traj.steps.len() as u64;
                metrics.completed_reward += traj.total_reward();
                completed.push(traj);
            }
        }

        let arrivals = generate_arrivals(&mut streams.arrivals, &mut streams.sharing, cfg, next_id);
        next_id += arrivals.len() as u64;
        state = transition(&state, arrivals, &selection.decisions)?;
        metrics.epochs += 1;
    }

    let log = finalize_episode(completed, cfg.tau_max)?;
    Ok((log, metrics))
}
