//! Jobs, market state, stochastic arrivals, per-job rewards and the
//! epoch-to-epoch state transition.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A container waiting for transport. Jobs are the bidding agents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Job {
    pub id: u64,
    /// Epochs left until the due date. A job that is not shipped at `tau == 0` fails.
    pub tau: u32,
    /// Distance to destination.
    pub dist: f64,
    /// Capacity units required.
    pub vol: u32,
    /// Due date at arrival.
    pub original_tau: u32,
    pub shares_info: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SystemState {
    pub epoch: u64,
    /// Kept in ascending id order.
    pub jobs: Vec<Job>,
}

impl SystemState {
    pub fn new(epoch: u64, jobs: Vec<Job>) -> Self {
        Self { epoch, jobs }
    }

    pub fn len(&self) -> usize {
        self.jobs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.jobs.is_empty()
    }
}

/// How new jobs enter the market each epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ArrivalProcess {
    /// Count, due date, distance and volume drawn uniformly over the instance ranges.
    Uniform,
    /// A deterministic batch of identical jobs every epoch.
    Fixed { count: u32, tau: u32, dist: f64, vol: u32 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InstanceConfig {
    pub max_arrivals: u32,
    pub tau_max: u32,
    pub dist_min: f64,
    pub dist_max: f64,
    pub vol_max: u32,
    pub c_hold: f64,
    pub c_pen: f64,
    pub c_mile: f64,
    pub capacity: u32,
    pub sharing_rate: f64,
    pub arrivals: ArrivalProcess,
}

impl Default for InstanceConfig {
    fn default() -> Self {
        Self {
            max_arrivals: 10,
            tau_max: 5,
            dist_min: 10.0,
            dist_max: 100.0,
            vol_max: 10,
            c_hold: 1.0,
            c_pen: 10.0,
            c_mile: 0.1,
            capacity: 80,
            sharing_rate: 0.0,
            arrivals: ArrivalProcess::Uniform,
        }
    }
}

impl InstanceConfig {
    /// Checks ranges, returning the offending field name on failure.
    pub fn validate(&self) -> Result<()> {
        fn bad(field: &str, msg: impl std::fmt::Display) -> Error {
            Error::Config(format!("{field}: {msg}"))
        }
        if self.tau_max < 1 {
            return Err(bad("tau_max", "must be at least 1"));
        }
        if !(self.dist_min.is_finite() && self.dist_min > 0.0) {
            return Err(bad("dist_min", format!("must be positive, got {}", self.dist_min)));
        }
        if !(self.dist_max.is_finite() && self.dist_max >= self.dist_min) {
            return Err(bad("dist_max", format!("must be at least dist_min, got {}", self.dist_max)));
        }
        if self.vol_max < 1 {
            return Err(bad("vol_max", "must be at least 1"));
        }
        for (field, v) in [("c_hold", self.c_hold), ("c_pen", self.c_pen), ("c_mile", self.c_mile)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(bad(field, format!("must be non-negative, got {v}")));
            }
        }
        if self.capacity < 1 {
            return Err(bad("capacity", "must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.sharing_rate) {
            return Err(bad("sharing_rate", format!("must lie in [0, 1], got {}", self.sharing_rate)));
        }
        if let ArrivalProcess::Fixed { tau, dist, vol, .. } = self.arrivals {
            if tau > self.tau_max {
                return Err(bad("arrivals.tau", format!("must not exceed tau_max ({})", self.tau_max)));
            }
            if !(dist > 0.0 && dist <= self.dist_max) {
                return Err(bad("arrivals.dist", format!("must lie in (0, dist_max], got {dist}")));
            }
            if vol < 1 || vol > self.vol_max {
                return Err(bad("arrivals.vol", format!("must lie in [1, vol_max], got {vol}")));
            }
        }
        Ok(())
    }
}

/// Draws one epoch's batch of new jobs.
///
/// `demand` drives counts and job attributes; `sharing` drives only the
/// information-sharing flags, so changing the sharing rate leaves the demand
/// sequence untouched.
pub fn generate_arrivals<D: Rng + ?Sized, S: Rng + ?Sized>(
    demand: &mut D,
    sharing: &mut S,
    cfg: &InstanceConfig,
    next_id: u64,
) -> Vec<Job> {
    let mut draw_share = || sharing.gen::<f64>() < cfg.sharing_rate;
    match cfg.arrivals {
        ArrivalProcess::Uniform => {
            let count = demand.gen_range(0..=cfg.max_arrivals) as u64;
            (0..count)
                .map(|i| {
                    let tau = demand.gen_range(1..=cfg.tau_max);
                    let dist = demand.gen_range(cfg.dist_min..=cfg.dist_max);
                    let vol = demand.gen_range(1..=cfg.vol_max);
                    Job {
                        id: next_id + i,
                        tau,
                        dist,
                        vol,
                        original_tau: tau,
                        shares_info: draw_share(),
                    }
                })
                .collect()
        }
        ArrivalProcess::Fixed { count, tau, dist, vol } => (0..count as u64)
            .map(|i| Job {
                id: next_id + i,
                tau,
                dist,
                vol,
                original_tau: tau,
                shares_info: draw_share(),
            })
            .collect(),
    }
}

/// Reward a job collects in one epoch: minus its bid when shipped, otherwise
/// holding cost or, at the due date, the failure penalty.
pub fn direct_reward(job: &Job, accepted: bool, bid: f64, cfg: &InstanceConfig) -> f64 {
    if accepted {
        -bid
    } else if job.tau > 0 {
        -cfg.c_hold * job.vol as f64
    } else {
        -cfg.c_pen * job.vol as f64
    }
}

/// Advances the market by one epoch. Shipped jobs and unshipped jobs at their
/// due date leave; the rest age by one epoch and the arrivals are appended.
pub fn transition(state: &SystemState, arrivals: Vec<Job>, decisions: &[bool]) -> Result<SystemState> {
    if decisions.len() != state.jobs.len() {
        return Err(Error::DecisionLength { expected: state.jobs.len(), got: decisions.len() });
    }
    let mut jobs: Vec<Job> = state
        .jobs
        .iter()
        .zip(decisions)
        .filter(|(job, &shipped)| !shipped && job.tau > 0)
        .map(|(job, _)| Job { tau: job.tau - 1, ..job.clone() })
        .collect();
    jobs.extend(arrivals);
    Ok(SystemState { epoch: state.epoch + 1, jobs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn job(id: u64, tau: u32, vol: u32) -> Job {
        Job { id, tau, dist: 50.0, vol, original_tau: tau.max(1), shares_info: false }
    }

    #[test]
    fn zero_arrival_bound_gives_empty_batch() {
        let cfg = InstanceConfig { max_arrivals: 0, ..Default::default() };
        let mut a = ChaCha8Rng::seed_from_u64(1);
        let mut b = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            assert!(generate_arrivals(&mut a, &mut b, &cfg, 0).is_empty());
        }
    }

    #[test]
    fn arrivals_are_deterministic_under_seed() {
        let cfg = InstanceConfig { sharing_rate: 0.5, ..Default::default() };
        let draw = || {
            let mut a = ChaCha8Rng::seed_from_u64(99);
            let mut b = ChaCha8Rng::seed_from_u64(100);
            (0..20).flat_map(|i| generate_arrivals(&mut a, &mut b, &cfg, i * 100)).collect::<Vec<_>>()
        };
        assert_eq!(draw(), draw());
    }

    #[test]
    fn arrival_moments_match_uniform_ranges() {
        // count ~ U{0..10}: mean 5; vol ~ U{1..10}: mean 5.5
        let cfg = InstanceConfig::default();
        let mut a = ChaCha8Rng::seed_from_u64(7);
        let mut b = ChaCha8Rng::seed_from_u64(8);
        let draws = 100_000;
        let (mut count, mut vol_sum, mut vol_n) = (0usize, 0u64, 0u64);
        for _ in 0..draws {
            let batch = generate_arrivals(&mut a, &mut b, &cfg, 0);
            count += batch.len();
            for j in &batch {
                vol_sum += j.vol as u64;
                vol_n += 1;
                assert!(j.tau >= 1 && j.tau <= 5 && j.tau == j.original_tau);
                assert!(j.dist >= 10.0 && j.dist <= 100.0);
            }
        }
        let mean_count = count as f64 / draws as f64;
        let mean_vol = vol_sum as f64 / vol_n as f64;
        assert!((mean_count - 5.0).abs() < 0.1, "mean count {mean_count}");
        assert!((mean_vol - 5.5).abs() < 0.1, "mean vol {mean_vol}");
    }

    #[test]
    fn sharing_stream_does_not_perturb_demand() {
        let demand_for = |rate: f64| {
            let cfg = InstanceConfig { sharing_rate: rate, ..Default::default() };
            let mut a = ChaCha8Rng::seed_from_u64(3);
            let mut b = ChaCha8Rng::seed_from_u64(4);
            (0..30)
                .flat_map(|i| generate_arrivals(&mut a, &mut b, &cfg, i * 100))
                .map(|j| (j.id, j.tau, j.dist.to_bits(), j.vol))
                .collect::<Vec<_>>()
        };
        assert_eq!(demand_for(0.0), demand_for(0.7));
    }

    #[test]
    fn ids_are_consecutive() {
        let cfg = InstanceConfig { arrivals: ArrivalProcess::Fixed { count: 3, tau: 0, dist: 10.0, vol: 1 }, ..Default::default() };
        let mut a = ChaCha8Rng::seed_from_u64(0);
        let mut b = ChaCha8Rng::seed_from_u64(0);
        let ids: Vec<u64> = generate_arrivals(&mut a, &mut b, &cfg, 41).iter().map(|j| j.id).collect();
        assert_eq!(ids, vec![41, 42, 43]);
    }

    #[test]
    fn reward_cases() {
        let cfg = InstanceConfig::default();
        assert_eq!(direct_reward(&job(0, 2, 3), true, 50.0, &cfg), -50.0);
        assert_eq!(direct_reward(&job(0, 3, 3), false, 50.0, &cfg), -3.0);
        assert_eq!(direct_reward(&job(0, 0, 3), false, 50.0, &cfg), -30.0);
    }

    #[test]
    fn transition_removes_shipped_and_failed() {
        let a = job(1, 3, 1);
        let b = job(2, 0, 1);
        let c = job(3, 2, 1);
        let d = job(4, 4, 1);
        let state = SystemState::new(5, vec![a, b, c.clone(), ]);
        let next = transition(&state, vec![d.clone()], &[true, false, false]).unwrap();
        assert_eq!(next.epoch, 6);
        assert_eq!(next.jobs, vec![Job { tau: 1, ..c }, d]);
    }

    #[test]
    fn transition_edge_cases() {
        let empty = SystemState::default();
        assert!(transition(&empty, vec![], &[]).unwrap().is_empty());

        let state = SystemState::new(0, vec![job(1, 2, 1), job(2, 0, 1)]);
        let arrivals = vec![job(3, 4, 2), job(4, 1, 5)];
        let next = transition(&state, arrivals.clone(), &[true, true]).unwrap();
        assert_eq!(next.jobs, arrivals);

        assert!(matches!(
            transition(&state, vec![], &[true]),
            Err(Error::DecisionLength { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn validation_names_the_field() {
        let cfg = InstanceConfig { capacity: 0, ..Default::default() };
        assert!(cfg.validate().unwrap_err().to_string().contains("capacity"));
        let cfg = InstanceConfig { sharing_rate: 1.5, ..Default::default() };
        assert!(cfg.validate().unwrap_err().to_string().contains("sharing_rate"));
        InstanceConfig::default().validate().unwrap();
    }

    proptest! {
        #[test]
        fn transition_conserves_and_ages(seed in any::<u64>(), ship_mask in any::<u64>()) {
            let cfg = InstanceConfig::default();
            let mut a = ChaCha8Rng::seed_from_u64(seed);
            let mut b = ChaCha8Rng::seed_from_u64(seed ^ 1);
            let mut state = SystemState::new(0, generate_arrivals(&mut a, &mut b, &cfg, 0));
            let mut next_id = state.len() as u64;
            for step in 0..8u32 {
                let decisions: Vec<bool> = (0..state.len())
                    .map(|i| (ship_mask.rotate_left(step * 7) >> (i % 64)) & 1 == 1)
                    .collect();
                let arrivals = generate_arrivals(&mut a, &mut b, &cfg, next_id);
                next_id += arrivals.len() as u64;
                let shipped = decisions.iter().filter(|d| **d).count();
                let failed = state.jobs.iter().zip(&decisions).filter(|(j, d)| !**d && j.tau == 0).count();
                let n_arrivals = arrivals.len();
                let next = transition(&state, arrivals, &decisions).unwrap();
                prop_assert_eq!(next.len(), state.len() - shipped - failed + n_arrivals);
                for j in &next.jobs {
                    prop_assert!(j.tau <= j.original_tau && j.original_tau <= cfg.tau_max);
                    if let Some(prev) = state.jobs.iter().find(|p| p.id == j.id) {
                        prop_assert_eq!(j.tau + 1, prev.tau);
                        prop_assert_eq!(&Job { tau: prev.tau, ..j.clone() }, prev);
                    }
                }
                let mut ids: Vec<u64> = next.jobs.iter().map(|j| j.id).collect();
                ids.dedup();
                prop_assert_eq!(ids.len(), next.len());
                state = next;
            }
        }

        #[test]
        fn reward_is_non_positive_for_non_negative_bids(
            bid in 0.0f64..1e6, tau in 0u32..=5, vol in 1u32..=10, accepted in any::<bool>()
        ) {
            let cfg = InstanceConfig::default();
            prop_assert!(direct_reward(&job(0, tau, vol), accepted, bid, &cfg) <= 0.0);
        }
    }
}
