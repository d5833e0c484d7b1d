//! The passive carrier: transport costs and the profit-maximizing job
//! selection for one departure.
//!
//! Selection is a 0-1 knapsack over integer volumes. Job values are real, so
//! both solvers rank subsets on a fixed-point grid of [`VALUE_SCALE`] units per
//! money unit; ties on that grid are broken in favour of the lexicographically
//! smallest list of job ids, which makes the choice reproducible.

use crate::error::{Error, Result};
use crate::market::Job;

/// Fixed-point units per money unit used when comparing subset values.
pub const VALUE_SCALE: f64 = 1e6;

/// Largest sheet the exhaustive solver accepts.
pub const BRUTE_FORCE_LIMIT: usize = 20;

// Keeps sums of many saturated entries far from i64 overflow.
const MAX_UNITS: f64 = 1e15;

pub fn transport_cost(job: &Job, c_mile: f64) -> f64 {
    c_mile * job.vol as f64 * job.dist
}

#[derive(Debug, Clone, PartialEq)]
pub struct BidEntry {
    pub job_id: u64,
    pub bid: f64,
    /// Bid minus transport cost.
    pub value: f64,
    pub vol: u32,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BidSheet {
    pub entries: Vec<BidEntry>,
}

impl BidSheet {
    /// Builds a sheet from jobs and their bids, one entry per job in order.
    pub fn new(jobs: &[Job], bids: &[f64], c_mile: f64) -> Self {
        assert_eq!(jobs.len(), bids.len(), "one bid per job");
        let entries = jobs
            .iter()
            .zip(bids)
            .map(|(job, &bid)| BidEntry {
                job_id: job.id,
                bid,
                value: bid - transport_cost(job, c_mile),
                vol: job.vol,
            })
            .collect();
        Self { entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult {
    /// Acceptance flag per sheet entry, in sheet order.
    pub decisions: Vec<bool>,
    pub total_value: f64,
    pub used_capacity: u32,
}

/// Value of an entry on the comparison grid. Positive values never round to
/// zero, so "accepted only if value > 0" survives the conversion.
fn value_units(value: f64) -> i64 {
    if value.is_nan() || value <= 0.0 {
        return 0;
    }
    let units = (value * VALUE_SCALE).round().clamp(1.0, MAX_UNITS);
    units as i64
}

/// Indices of entries eligible for selection, sorted by job id.
fn candidates(sheet: &BidSheet) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..sheet.len()).filter(|&i| value_units(sheet.entries[i].value) > 0).collect();
    idx.sort_by_key(|&i| sheet.entries[i].job_id);
    idx
}

fn finish(sheet: &BidSheet, chosen: &[usize]) -> SelectionResult {
    let mut decisions = vec![false; sheet.len()];
    let mut ordered = chosen.to_vec();
    ordered.sort_by_key(|&i| sheet.entries[i].job_id);
    let mut total_value = 0.0;
    let mut used_capacity = 0;
    for &i in &ordered {
        decisions[i] = true;
        total_value += sheet.entries[i].value;
        used_capacity += sheet.entries[i].vol;
    }
    SelectionResult { decisions, total_value, used_capacity }
}

/// Selects the feasible subset of bids with maximal total value by dynamic
/// programming over capacity units, O(n·C).
pub fn select_jobs(sheet: &BidSheet, capacity: u32) -> SelectionResult {
    let items = candidates(sheet);
    let cap = capacity as usize;
    let width = cap + 1;
    let m = items.len();

    // best[i * width + c]: optimum over items[i..] with capacity c.
    let mut best = vec![0i64; (m + 1) * width];
    for i in (0..m).rev() {
        let entry = &sheet.entries[items[i]];
        let units = value_units(entry.value);
        let vol = entry.vol as usize;
        for c in 0..width {
            let skip = best[(i + 1) * width + c];
            let take = if vol <= c { units + best[(i + 1) * width + c - vol] } else { i64::MIN };
            best[i * width + c] = skip.max(take);
        }
    }

    // Walking forward and taking an item whenever an optimum allows it yields
    // the optimum with the smallest id list.
    let mut chosen = Vec::new();
    let mut c = cap;
    for i in 0..m {
        let entry = &sheet.entries[items[i]];
        let vol = entry.vol as usize;
        if vol <= c && value_units(entry.value) + best[(i + 1) * width + c - vol] == best[i * width + c] {
            chosen.push(items[i]);
            c -= vol;
        }
    }
    finish(sheet, &chosen)
}

/// Exhaustive reference solver with the same value grid and tie-break as
/// [`select_jobs`].
pub fn select_jobs_bruteforce(sheet: &BidSheet, capacity: u32) -> Result<SelectionResult> {
    if sheet.len() > BRUTE_FORCE_LIMIT {
        return Err(Error::TooManyEntries { max: BRUTE_FORCE_LIMIT, got: sheet.len() });
    }
    let mut order: Vec<usize> = (0..sheet.len()).collect();
    order.sort_by_key(|&i| sheet.entries[i].job_id);

    let mut best_units = 0i64;
    let mut best_ids: Vec<u64> = Vec::new();
    let mut best_set: Vec<usize> = Vec::new();
    for mask in 0u32..(1u32 << sheet.len()) {
        let set: Vec<usize> = order.iter().copied().enumerate().filter(|(k, _)| mask >> k & 1 == 1).map(|(_, i)| i).collect();
        if set.iter().any(|&i| sheet.entries[i].value <= 0.0) {
            continue;
        }
        let vol: u64 = set.iter().map(|&i| sheet.entries[i].vol as u64).sum();
        if vol > capacity as u64 {
            continue;
        }
        let units: i64 = set.iter().map(|&i| value_units(sheet.entries[i].value)).sum();
        let ids: Vec<u64> = set.iter().map(|&i| sheet.entries[i].job_id).collect();
        if units > best_units || (units == best_units && ids < best_ids) {
            best_units = units;
            best_ids = ids;
            best_set = set;
        }
    }
    // The empty set is the baseline optimum; with zero best units it is the
    // lexicographically smallest list as well.
    if best_units == 0 {
        best_set.clear();
    }
    Ok(finish(sheet, &best_set))
}
