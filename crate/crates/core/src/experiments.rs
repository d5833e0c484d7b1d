//! Scenario presets, parameter sweeps and run-level metrics.
//!
//! Every sweep is a list of cells (instance and learner settings) crossed
//! with a list of seeds. Replication `r` uses the same seed in every cell, so
//! cells are compared on identical demand sequences. Cells run in parallel;
//! rows come back in (cell, seed) order regardless of scheduling.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learner::{train, validate, EpisodeMetrics, LearnConfig};
use crate::market::{ArrivalProcess, InstanceConfig};
use crate::policy::{FeatureSet, PolicyParams};

pub const DEFAULT_REPLICATIONS: u32 = 5;
pub const SHARING_RATES: [f64; 11] = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0];
pub const HORIZONS: [u32; 7] = [10, 25, 50, 100, 250, 500, 1000];
pub const DEFAULT_CAPACITIES: [u32; 8] = [10, 20, 40, 60, 80, 120, 160, 250];
pub const LEARNING_RATES: [f64; 4] = [0.0001, 0.001, 0.01, 0.1];
pub const BIAS_INITS: [f64; 11] = [-50.0, -40.0, -30.0, -20.0, -10.0, 0.0, 10.0, 20.0, 30.0, 40.0, 50.0];
pub const SIGMA_INITS: [f64; 5] = [0.01, 0.1, 1.0, 10.0, 25.0];

/// Toy markets price in units ten times smaller than the base market (one
/// unit of volume over distance 10), so exploration is scaled down with them.
pub const TOY_SIGMA0: f64 = 1.0;
pub const TOY_SIGMA_FLOOR: f64 = 0.25;

/// Training budget presets.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    /// 100,000 training steps; the default for everyday runs and acceptance.
    #[default]
    Desk,
    /// The full budgets: 400,000 steps (N=4000 at T=100), 1,000,000 for the horizon sweep.
    Paper,
}

impl Scale {
    pub fn training_steps(self) -> u64 {
        match self {
            Scale::Desk => 100_000,
            Scale::Paper => 400_000,
        }
    }

    pub fn horizon_sweep_steps(self) -> u64 {
        match self {
            Scale::Desk => 100_000,
            Scale::Paper => 1_000_000,
        }
    }

    /// Episodes that spend `steps` at `horizon` epochs each, rounded down.
    pub fn episodes_for(steps: u64, horizon: u32) -> u32 {
        (steps / horizon.max(1) as u64).max(1) as u32
    }

    pub fn episodes(self, horizon: u32) -> u32 {
        Self::episodes_for(self.training_steps(), horizon)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    pub parameter: String,
    pub values: Vec<f64>,
}

impl SweepAxis {
    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(format!("sweep_axis.values: {msg}")));
        if self.values.is_empty() {
            return bad("must not be empty".into());
        }
        for &v in &self.values {
            let ok = match self.parameter.as_str() {
                "sharing_rate" => (0.0..=1.0).contains(&v),
                "capacity" | "horizon" => v >= 1.0 && v.fract() == 0.0 && v <= u32::MAX as f64,
                other => {
                    return Err(Error::Config(format!(
                        "sweep_axis.parameter: unknown parameter {other:?} (expected sharing_rate, capacity or horizon)"
                    )))
                }
            };
            if !ok {
                return bad(format!("{v} is out of range for {}", self.parameter));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub name: String,
    pub instance: InstanceConfig,
    pub learn: LearnConfig,
    /// Overrides the default value list of the sweep over `parameter`.
    pub sweep_axis: Option<SweepAxis>,
    pub replications: u32,
    /// Explicit seeds. When empty, replication `r` uses `learn.seed + r`.
    pub seeds: Vec<u64>,
}

impl ScenarioSpec {
    pub fn new(name: impl Into<String>, instance: InstanceConfig, learn: LearnConfig) -> Self {
        Self { name: name.into(), instance, learn, sweep_axis: None, replications: DEFAULT_REPLICATIONS, seeds: Vec::new() }
    }

    pub fn validate(&self) -> Result<()> {
        self.instance.validate()?;
        self.learn.validate()?;
        if self.replications < 1 {
            return Err(Error::Config("replications: must be at least 1".into()));
        }
        if let Some(axis) = &self.sweep_axis {
            axis.validate()?;
        }
        Ok(())
    }

    pub fn seeds(&self) -> Vec<u64> {
        if self.seeds.is_empty() {
            (0..self.replications as u64).map(|r| self.learn.seed.wrapping_add(r)).collect()
        } else {
            self.seeds.clone()
        }
    }

    /// Sets the episode count to the scale's training budget at the current horizon.
    pub fn scaled(mut self, scale: Scale) -> Self {
        self.learn.episodes = scale.episodes(self.learn.horizon);
        self
    }

    fn axis_values(&self, parameter: &str) -> Option<&[f64]> {
        self.sweep_axis.as_ref().filter(|a| a.parameter == parameter).map(|a| a.values.as_slice())
    }
}

/// Default market with tuned learner settings at the given budget.
pub fn base_scenario(scale: Scale) -> ScenarioSpec {
    ScenarioSpec::new("base", InstanceConfig::default(), LearnConfig::default()).scaled(scale)
}

/// One job per epoch that must ship now (vol 1, dist 10, so transport costs 1
/// and failing costs 10), with capacity for ten.
pub fn toy_abundant(scale: Scale) -> ScenarioSpec {
    toy("abundant", 1, 10, scale)
}

/// Two identical must-ship-now jobs per epoch and room for one.
pub fn toy_scarce(scale: Scale) -> ScenarioSpec {
    toy("scarce", 2, 1, scale)
}

fn toy(name: &str, count: u32, capacity: u32, scale: Scale) -> ScenarioSpec {
    let instance = InstanceConfig {
        arrivals: ArrivalProcess::Fixed { count, tau: 0, dist: 10.0, vol: 1 },
        capacity,
        ..InstanceConfig::default()
    };
    let learn = LearnConfig { sigma0: TOY_SIGMA0, sigma_floor: TOY_SIGMA_FLOOR, ..LearnConfig::default() };
    ScenarioSpec::new(name, instance, learn).scaled(scale)
}

/// Metrics of a trained policy, measured on fresh validation episodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub avg_reward_per_completed_job: Option<f64>,
    pub shipped_fraction: Option<f64>,
    pub failed_fraction: Option<f64>,
    pub avg_bids_per_job: Option<f64>,
    pub carrier_profit_margin: Option<f64>,
    pub mean_accepted_bid: Option<f64>,
    pub carrier_profit_per_epoch: Option<f64>,
    pub final_theta: Vec<f64>,
    pub final_sigma: f64,
    /// Raw validation tallies the ratios are computed from.
    pub ledger: EpisodeMetrics,
}

impl RunMetrics {
    pub fn new(params: &PolicyParams, ledger: EpisodeMetrics) -> Self {
        Self {
            avg_reward_per_completed_job: ledger.avg_reward_per_completed_job(),
            shipped_fraction: ledger.shipped_fraction(),
            failed_fraction: ledger.failed_fraction(),
            avg_bids_per_job: ledger.avg_bids_per_job(),
            carrier_profit_margin: ledger.carrier_profit_margin(),
            mean_accepted_bid: ledger.mean_accepted_bid(),
            carrier_profit_per_epoch: ledger.carrier_profit_per_epoch(),
            final_theta: params.theta.clone(),
            final_sigma: params.sigma,
            ledger,
        }
    }

    /// Average cost per completed job.
    pub fn validation_cost(&self) -> Option<f64> {
        self.avg_reward_per_completed_job.map(|r| -r)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RunOutcome {
    Completed(RunMetrics),
    Diverged { episode: usize, detail: String },
}

impl RunOutcome {
    pub fn metrics(&self) -> Option<&RunMetrics> {
        match self {
            RunOutcome::Completed(m) => Some(m),
            RunOutcome::Diverged { .. } => None,
        }
    }
}

/// One point of a sweep: a labelled instance/learner configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub scenario: String,
    /// Swept parameter values, in column order.
    pub settings: Vec<(String, f64)>,
    pub instance: InstanceConfig,
    pub learn: LearnConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub scenario: String,
    pub settings: Vec<(String, f64)>,
    pub seed: u64,
    pub outcome: RunOutcome,
}

/// Trains with `seed`, then measures the final policy on the learner's
/// validation settings. Divergence is an outcome, not an error.
pub fn run_once(instance: &InstanceConfig, learn: &LearnConfig, seed: u64) -> Result<RunOutcome> {
    let learn = LearnConfig { seed, ..learn.clone() };
    let params = match train(&learn, instance) {
        Ok((params, _)) => params,
        Err(Error::Diverged { episode, detail }) => return Ok(RunOutcome::Diverged { episode, detail }),
        Err(e) => return Err(e),
    };
    let report = validate(&params, learn.features, instance, learn.validation_episodes, learn.validation_horizon, seed)?;
    Ok(RunOutcome::Completed(RunMetrics::new(&params, report.pooled)))
}

/// Runs every cell under every seed in parallel.
pub fn run_cells(cells: &[Cell], seeds: &[u64]) -> Result<Vec<SweepRow>> {
    for cell in cells {
        cell.instance.validate()?;
        cell.learn.validate()?;
    }
    let jobs: Vec<(&Cell, u64)> = cells.iter().flat_map(|c| seeds.iter().map(move |&s| (c, s))).collect();
    jobs.into_par_iter()
        .map(|(cell, seed)| {
            Ok(SweepRow {
                scenario: cell.scenario.clone(),
                settings: cell.settings.clone(),
                seed,
                outcome: run_once(&cell.instance, &cell.learn, seed)?,
            })
        })
        .collect()
}

fn cell(base: &ScenarioSpec, settings: Vec<(&str, f64)>) -> Cell {
    Cell {
        scenario: base.name.clone(),
        settings: settings.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
        instance: base.instance.clone(),
        learn: base.learn.clone(),
    }
}

/// One run per sharing rate, 0% to 100% in steps of 10% unless overridden.
pub fn sharing_sweep(base: &ScenarioSpec) -> Result<Vec<SweepRow>> {
    base.validate()?;
    let rates = base.axis_values("sharing_rate").unwrap_or(&SHARING_RATES);
    let cells: Vec<Cell> = rates
        .iter()
        .map(|&rate| {
            let mut c = cell(base, vec![("sharing_rate", rate)]);
            c.instance.sharing_rate = rate;
            c
        })
        .collect();
    run_cells(&cells, &base.seeds())
}

pub fn capacity_sweep(base: &ScenarioSpec, capacities: &[u32]) -> Result<Vec<SweepRow>> {
    base.validate()?;
    if let Some(&c) = capacities.iter().find(|&&c| c < 1) {
        return Err(Error::Config(format!("capacity: must be at least 1, got {c}")));
    }
    let cells: Vec<Cell> = capacities
        .iter()
        .map(|&capacity| {
            let mut c = cell(base, vec![("capacity", capacity as f64)]);
            c.instance.capacity = capacity;
            c
        })
        .collect();
    run_cells(&cells, &base.seeds())
}

/// The capacity list from the scenario's sweep axis, or the defaults.
pub fn capacities(base: &ScenarioSpec) -> Vec<u32> {
    base.axis_values("capacity")
        .map(|vs| vs.iter().map(|&v| v as u32).collect())
        .unwrap_or_else(|| DEFAULT_CAPACITIES.to_vec())
}

/// Varies the episode length at a fixed total step budget; validation keeps
/// the learner's validation horizon for every cell.
pub fn horizon_sweep(base: &ScenarioSpec, scale: Scale) -> Result<Vec<SweepRow>> {
    base.validate()?;
    let horizons: Vec<u32> = base
        .axis_values("horizon")
        .map(|vs| vs.iter().map(|&v| v as u32).collect())
        .unwrap_or_else(|| HORIZONS.to_vec());
    let cells: Vec<Cell> = horizons
        .iter()
        .map(|&horizon| {
            let episodes = Scale::episodes_for(scale.horizon_sweep_steps(), horizon);
            let mut c = cell(base, vec![("horizon", horizon as f64), ("episodes", episodes as f64)]);
            c.learn.horizon = horizon;
            c.learn.episodes = episodes;
            c
        })
        .collect();
    run_cells(&cells, &base.seeds())
}

/// Both single-type scenarios, on the given seeds.
pub fn toy_scenarios(scale: Scale, seeds: &[u64]) -> Result<Vec<SweepRow>> {
    let cells: Vec<Cell> = [toy_abundant(scale), toy_scarce(scale)].iter().map(|s| cell(s, vec![])).collect();
    run_cells(&cells, seeds)
}

/// Trains the base features and the transport-cost-only features on the same
/// seeds, scenario names `standard` and `carrier_cost`.
pub fn carrier_cost_feature_scenario(base: &ScenarioSpec) -> Result<Vec<SweepRow>> {
    base.validate()?;
    let cells: Vec<Cell> = [("standard", FeatureSet::Standard), ("carrier_cost", FeatureSet::CarrierCost)]
        .into_iter()
        .map(|(name, features)| {
            let mut c = cell(base, vec![]);
            c.scenario = name.to_string();
            c.learn.features = features;
            c.learn.theta0 = None;
            c
        })
        .collect();
    run_cells(&cells, &base.seeds())
}

/// The tuning sequence: a learning-rate grid from a standard-normal start,
/// then initial bias weights, then initial standard deviations. Every row
/// records all four settings.
pub fn learning_rate_and_init_sweeps(base: &ScenarioSpec) -> Result<Vec<SweepRow>> {
    base.validate()?;
    let tuned = &base.learn;
    let mut cells = Vec::new();
    let mut push = |stage: &str, alpha_mu: f64, alpha_sigma: f64, bias0: f64, sigma0: f64| {
        let mut c = cell(
            base,
            vec![("alpha_mu", alpha_mu), ("alpha_sigma", alpha_sigma), ("bias0", bias0), ("sigma0", sigma0)],
        );
        c.scenario = stage.to_string();
        c.learn.alpha_mu = alpha_mu;
        c.learn.alpha_sigma = alpha_sigma;
        c.learn.sigma0 = sigma0;
        c.learn.sigma_floor = tuned.sigma_floor.min(sigma0);
        let mut theta = vec![0.0; tuned.features.dim()];
        theta[0] = bias0;
        c.learn.theta0 = Some(theta);
        cells.push(c);
    };
    for &a_mu in &LEARNING_RATES {
        for &a_sigma in &LEARNING_RATES {
            push("learning_rate", a_mu, a_sigma, 0.0, 1.0);
        }
    }
    for &bias in &BIAS_INITS {
        push("bias_init", tuned.alpha_mu, tuned.alpha_sigma, bias, 1.0);
    }
    for &sigma0 in &SIGMA_INITS {
        push("sigma_init", tuned.alpha_mu, tuned.alpha_sigma, 0.0, sigma0);
    }
    run_cells(&cells, &base.seeds())
}

/// Across-seed aggregate of one cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub scenario: String,
    pub settings: Vec<(String, f64)>,
    pub runs: usize,
    pub diverged: usize,
    pub validation_cost: Option<Stat>,
    pub shipped_fraction: Option<Stat>,
    pub carrier_profit_margin: Option<Stat>,
    pub final_sigma: Option<Stat>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

impl Stat {
    pub fn of(values: impl IntoIterator<Item = f64>) -> Option<Stat> {
        let values: Vec<f64> = values.into_iter().collect();
        if values.is_empty() {
            return None;
        }
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Some(Stat { mean, min, max })
    }
}

/// Groups rows by (scenario, settings) in first-appearance order.
pub fn summarize(rows: &[SweepRow]) -> Vec<CellSummary> {
    type Group<'a> = (&'a str, &'a [(String, f64)], Vec<&'a SweepRow>);
    let mut groups: Vec<Group> = Vec::new();
    for row in rows {
        match groups.iter_mut().find(|(s, k, _)| *s == row.scenario && *k == row.settings.as_slice()) {
            Some((_, _, members)) => members.push(row),
            None => groups.push((&row.scenario, &row.settings, vec![row])),
        }
    }
    groups
        .into_iter()
        .map(|(scenario, settings, members)| {
            let done: Vec<&RunMetrics> = members.iter().filter_map(|r| r.outcome.metrics()).collect();
            CellSummary {
                scenario: scenario.to_string(),
                settings: settings.to_vec(),
                runs: members.len(),
                diverged: members.len() - done.len(),
                validation_cost: Stat::of(done.iter().filter_map(|m| m.validation_cost())),
                shipped_fraction: Stat::of(done.iter().filter_map(|m| m.shipped_fraction)),
                carrier_profit_margin: Stat::of(done.iter().filter_map(|m| m.carrier_profit_margin)),
                final_sigma: Stat::of(done.iter().map(|m| m.final_sigma)),
            }
        })
        .collect()
}
