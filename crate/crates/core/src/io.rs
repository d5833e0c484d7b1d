//! Policy checkpoints, CSV tables and run manifests.
//!
//! CSV numbers are written with 17 significant digits so every value parses
//! back to the same `f64`; missing values are empty fields.

use std::fs::File;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::config::ConfigFile;
use crate::error::{Error, Result};
use crate::experiments::{CellSummary, RunOutcome, Stat, SweepRow};
use crate::learner::{TrainingTrace, ValidationReport};
use crate::policy::{FeatureSet, PolicyParams, STANDARD_FEATURES};

/// Policy file contents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub theta: Vec<f64>,
    pub sigma: f64,
    pub feature_order: Vec<String>,
    pub config_hash: String,
}

impl Checkpoint {
    pub fn new(params: &PolicyParams, features: FeatureSet, config_hash: impl Into<String>) -> Self {
        Self {
            theta: params.theta.clone(),
            sigma: params.sigma,
            feature_order: features.names().iter().map(|s| s.to_string()).collect(),
            config_hash: config_hash.into(),
        }
    }

    /// Checks the feature order and weights and returns the usable policy.
    pub fn policy(&self) -> Result<(PolicyParams, FeatureSet)> {
        let features = FeatureSet::from_names(&self.feature_order).ok_or_else(|| {
            Error::Checkpoint(format!("feature_order {:?} does not match any known feature set", self.feature_order))
        })?;
        if self.theta.len() != features.dim() {
            return Err(Error::Checkpoint(format!(
                "theta: expected {} weights for this feature order, got {}",
                features.dim(),
                self.theta.len()
            )));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::Checkpoint(format!("sigma: must be positive, got {}", self.sigma)));
        }
        if self.theta.iter().any(|w| !w.is_finite()) {
            return Err(Error::Checkpoint("theta: weights must be finite".into()));
        }
        Ok((PolicyParams::new(self.theta.clone(), self.sigma)?, features))
    }
}

pub fn save_checkpoint(path: &Path, params: &PolicyParams, features: FeatureSet, config_hash: &str) -> Result<()> {
    write_json(path, &Checkpoint::new(params, features, config_hash))
}

pub fn load_checkpoint(path: &Path) -> Result<(PolicyParams, FeatureSet, Checkpoint)> {
    let text = std::fs::read_to_string(path)?;
    let checkpoint: Checkpoint =
        serde_json::from_str(&text).map_err(|e| Error::Checkpoint(format!("{}: {e}", path.display())))?;
    let (params, features) = checkpoint.policy()?;
    Ok((params, features, checkpoint))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// 17 significant digits in scientific notation.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

fn csv_writer(path: &Path) -> Result<csv::Writer<File>> {
    csv::Writer::from_path(path).map_err(csv_error)
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Io(std::io::Error::other(format!("{other:?}"))),
    }
}

/// Weight columns, always eight wide; feature sets with fewer weights leave the rest blank.
const WEIGHT_COLUMNS: usize = STANDARD_FEATURES.len();

fn weight_header() -> impl Iterator<Item = String> {
    (0..WEIGHT_COLUMNS).map(|i| format!("theta_{i}"))
}

fn weight_fields(theta: &[f64]) -> impl Iterator<Item = String> + '_ {
    (0..WEIGHT_COLUMNS).map(move |i| fmt_opt(theta.get(i).copied()))
}

pub const TRACE_METRIC_COLUMNS: [&str; 5] = [
    "avg_reward_per_completed_job",
    "shipped_fraction",
    "avg_bids_per_job",
    "carrier_profit_margin",
    "validation_avg_cost",
];

/// Columns: episode, sigma, theta_0..theta_7, then [`TRACE_METRIC_COLUMNS`].
pub fn write_trace_csv(path: &Path, trace: &TrainingTrace) -> Result<()> {
    let mut w = csv_writer(path)?;
    let header: Vec<String> = ["episode".to_string(), "sigma".to_string()]
        .into_iter()
        .chain(weight_header())
        .chain(TRACE_METRIC_COLUMNS.iter().map(|s| s.to_string()))
        .collect();
    w.write_record(&header).map_err(csv_error)?;
    for row in &trace.rows {
        let m = &row.metrics;
        let record: Vec<String> = [row.episode.to_string(), fmt_f64(row.sigma)]
            .into_iter()
            .chain(weight_fields(&row.theta))
            .chain([
                fmt_opt(m.avg_reward_per_completed_job()),
                fmt_opt(m.shipped_fraction()),
                fmt_opt(m.avg_bids_per_job()),
                fmt_opt(m.carrier_profit_margin()),
                fmt_opt(row.validation_avg_cost),
            ])
            .collect();
        w.write_record(&record).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

pub const SWEEP_METRIC_COLUMNS: [&str; 17] = [
    "status",
    "diverged_episode",
    "avg_reward_per_completed_job",
    "shipped_fraction",
    "failed_fraction",
    "avg_bids_per_job",
    "carrier_profit_margin",
    "mean_accepted_bid",
    "carrier_profit_per_epoch",
    "final_sigma",
    "epochs",
    "completed",
    "shipped",
    "failed",
    "completed_bids",
    "revenue",
    "transport_cost",
];

/// Columns: scenario, the swept settings (named after the first row's
/// settings), seed, [`SWEEP_METRIC_COLUMNS`], theta_0..theta_7.
pub fn write_sweep_csv(path: &Path, rows: &[SweepRow]) -> Result<()> {
    let mut w = csv_writer(path)?;
    let setting_names: Vec<String> = rows.first().map(|r| r.settings.iter().map(|(k, _)| k.clone()).collect()).unwrap_or_default();
    let header: Vec<String> = std::iter::once("scenario".to_string())
        .chain(setting_names.iter().cloned())
        .chain(std::iter::once("seed".to_string()))
        .chain(SWEEP_METRIC_COLUMNS.iter().map(|s| s.to_string()))
        .chain(weight_header())
        .collect();
    w.write_record(&header).map_err(csv_error)?;
    for row in rows {
        let names: Vec<String> = row.settings.iter().map(|(k, _)| k.clone()).collect();
        if names != setting_names {
            return Err(Error::Config(format!("sweep rows disagree on settings: {names:?} vs {setting_names:?}")));
        }
        let mut record: Vec<String> = std::iter::once(row.scenario.clone())
            .chain(row.settings.iter().map(|(_, v)| fmt_f64(*v)))
            .chain(std::iter::once(row.seed.to_string()))
            .collect();
        match &row.outcome {
            RunOutcome::Completed(m) => {
                let l = &m.ledger;
                record.extend([
                    "completed".to_string(),
                    String::new(),
                    fmt_opt(m.avg_reward_per_completed_job),
                    fmt_opt(m.shipped_fraction),
                    fmt_opt(m.failed_fraction),
                    fmt_opt(m.avg_bids_per_job),
                    fmt_opt(m.carrier_profit_margin),
                    fmt_opt(m.mean_accepted_bid),
                    fmt_opt(m.carrier_profit_per_epoch),
                    fmt_f64(m.final_sigma),
                    l.epochs.to_string(),
                    l.completed.to_string(),
                    l.shipped.to_string(),
                    l.failed.to_string(),
                    l.completed_bids.to_string(),
                    fmt_f64(l.revenue),
                    fmt_f64(l.transport_cost),
                ]);
                record.extend(weight_fields(&m.final_theta));
            }
            RunOutcome::Diverged { episode, .. } => {
                record.extend(["diverged".to_string(), episode.to_string()]);
                record.extend(std::iter::repeat_n(String::new(), SWEEP_METRIC_COLUMNS.len() - 2 + WEIGHT_COLUMNS));
            }
        }
        w.write_record(&record).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// Columns: scenario, settings, runs, diverged, then mean/min/max of the
/// validation cost, shipped fraction, profit margin and final σ.
pub fn write_summary_csv(path: &Path, summary: &[CellSummary]) -> Result<()> {
    let mut w = csv_writer(path)?;
    let setting_names: Vec<String> =
        summary.first().map(|c| c.settings.iter().map(|(k, _)| k.clone()).collect()).unwrap_or_default();
    let stats = ["validation_cost", "shipped_fraction", "carrier_profit_margin", "final_sigma"];
    let header: Vec<String> = std::iter::once("scenario".to_string())
        .chain(setting_names.iter().cloned())
        .chain(["runs".to_string(), "diverged".to_string()])
        .chain(stats.iter().flat_map(|s| ["mean", "min", "max"].map(|k| format!("{s}_{k}"))))
        .collect();
    w.write_record(&header).map_err(csv_error)?;
    for cell in summary {
        let stat_fields = |s: Option<Stat>| match s {
            Some(s) => [fmt_f64(s.mean), fmt_f64(s.min), fmt_f64(s.max)],
            None => Default::default(),
        };
        let record: Vec<String> = std::iter::once(cell.scenario.clone())
            .chain(cell.settings.iter().map(|(_, v)| fmt_f64(*v)))
            .chain([cell.runs.to_string(), cell.diverged.to_string()])
            .chain(stat_fields(cell.validation_cost))
            .chain(stat_fields(cell.shipped_fraction))
            .chain(stat_fields(cell.carrier_profit_margin))
            .chain(stat_fields(cell.final_sigma))
            .collect();
        w.write_record(&record).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// Columns: episode, completed, shipped_fraction, avg_bids_per_job,
/// carrier_profit_margin, avg_cost; a final row `pooled` covers all episodes.
pub fn write_validation_csv(path: &Path, report: &ValidationReport) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["episode", "completed", "shipped_fraction", "avg_bids_per_job", "carrier_profit_margin", "avg_cost"])
        .map_err(csv_error)?;
    let labelled = report.episodes.iter().enumerate().map(|(i, m)| (i.to_string(), m));
    for (label, m) in labelled.chain(std::iter::once(("pooled".to_string(), &report.pooled))) {
        w.write_record([
            label,
            m.completed.to_string(),
            fmt_opt(m.shipped_fraction()),
            fmt_opt(m.avg_bids_per_job()),
            fmt_opt(m.carrier_profit_margin()),
            fmt_opt(m.avg_reward_per_completed_job().map(|r| -r)),
        ])
        .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// What was run, with which fully resolved settings, and where the outputs went.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: Vec<String>,
    /// A complete config document; feeding it back through `--config`
    /// reproduces the run.
    pub config: ConfigFile,
    pub config_hash: String,
    pub seeds: Vec<u64>,
    pub version: String,
    /// Unix seconds.
    pub started_at: u64,
    pub finished_at: Option<u64>,
    pub outputs: Vec<PathBuf>,
}

impl RunManifest {
    pub fn start(command: Vec<String>, config: ConfigFile, seeds: Vec<u64>) -> Self {
        Self {
            command,
            config_hash: config.hash(),
            config,
            seeds,
            version: env!("CARGO_PKG_VERSION").to_string(),
            started_at: unix_now(),
            finished_at: None,
            outputs: Vec::new(),
        }
    }

    pub fn finish(&mut self, outputs: Vec<PathBuf>) {
        self.outputs = outputs;
        self.finished_at = Some(unix_now());
    }
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}
