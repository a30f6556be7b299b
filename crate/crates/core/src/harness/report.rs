//! Trial reports: full JSON and flat CSV.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::hypothesis::SelectiveHypothesis;
use crate::slicedice::SliceDiceTrace;

use super::scenario::Scenario;

pub const REPORT_SCHEMA: &str = "pqlearn.report/1";

/// Keys holding wall-clock measurements; dropped when comparing runs.
pub const TIMING_FIELDS: [&str; 4] = ["wall_ms", "elapsed_ms", "within_time_limit", "time_limit_ms"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub index: u64,
    pub seed: u64,
    pub err_q: Option<f64>,
    pub err_p: Option<f64>,
    pub rej_p: Option<f64>,
    pub rej_q: Option<f64>,
    /// One-sided errors under the test distribution for PQ pipelines, under
    /// the joint distribution for the round trip.
    pub false_positive: Option<f64>,
    pub false_negative: Option<f64>,
    /// Brute-forced over the class (round trip only).
    pub opt_plus: Option<f64>,
    /// Rank of the training span (parity only).
    pub rank: Option<usize>,
    pub success: bool,
    pub timed_out: bool,
    pub draws: u64,
    pub trace: Option<SliceDiceTrace>,
    pub error: Option<String>,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Quantiles {
    pub min: f64,
    pub median: f64,
    pub q90: f64,
    pub max: f64,
    pub mean: f64,
}

impl Quantiles {
    /// Nearest-rank quantiles; `None` for an empty input.
    pub fn of(values: impl IntoIterator<Item = f64>) -> Option<Self> {
        let mut v: Vec<f64> = values.into_iter().collect();
        if v.is_empty() {
            return None;
        }
        v.sort_by(f64::total_cmp);
        let rank = |q: f64| v[((q * v.len() as f64).ceil() as usize).clamp(1, v.len()) - 1];
        Some(Quantiles {
            min: v[0],
            median: rank(0.5),
            q90: rank(0.9),
            max: v[v.len() - 1],
            mean: v.iter().sum::<f64>() / v.len() as f64,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub trials: u64,
    pub successes: u64,
    pub success_fraction: f64,
    /// Whether the success fraction reaches `1 − δ`.
    pub contract_met: bool,
    pub timeouts: u64,
    pub errors: u64,
    pub err_q: Option<Quantiles>,
    pub rej_p: Option<Quantiles>,
    pub rej_q: Option<Quantiles>,
    pub draws: Option<Quantiles>,
}

impl Aggregate {
    pub fn of(records: &[TrialRecord], delta: f64) -> Self {
        let trials = records.len() as u64;
        let successes = records.iter().filter(|r| r.success).count() as u64;
        let success_fraction = if trials == 0 { 1.0 } else { successes as f64 / trials as f64 };
        Aggregate {
            trials,
            successes,
            success_fraction,
            contract_met: success_fraction >= 1.0 - delta,
            timeouts: records.iter().filter(|r| r.timed_out).count() as u64,
            errors: records.iter().filter(|r| r.error.is_some()).count() as u64,
            err_q: Quantiles::of(records.iter().filter_map(|r| r.err_q)),
            rej_p: Quantiles::of(records.iter().filter_map(|r| r.rej_p)),
            rej_q: Quantiles::of(records.iter().filter_map(|r| r.rej_q)),
            draws: Quantiles::of(records.iter().map(|r| r.draws as f64)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub schema: String,
    pub scenario: Scenario,
    pub aggregate: Aggregate,
    pub trials: Vec<TrialRecord>,
    /// The first trial's classifier, kept for plotting.
    pub hypothesis: Option<SelectiveHypothesis>,
    pub wall_ms: f64,
}

impl TrialReport {
    pub fn to_json(&self, include_timing: bool) -> String {
        to_json(self, include_timing)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.trials {
            w.serialize(CsvRow::from(r))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Pretty JSON, optionally with every timing field removed at any depth.
pub fn to_json<T: Serialize>(value: &T, include_timing: bool) -> String {
    let mut v = serde_json::to_value(value).expect("report serializes");
    if !include_timing {
        strip_timing(&mut v);
    }
    serde_json::to_string_pretty(&v).expect("value serializes")
}

fn strip_timing(v: &mut serde_json::Value) {
    match v {
        serde_json::Value::Object(map) => {
            for key in TIMING_FIELDS {
                map.remove(key);
            }
            map.values_mut().for_each(strip_timing);
        }
        serde_json::Value::Array(items) => items.iter_mut().for_each(strip_timing),
        _ => {}
    }
}

#[derive(Serialize)]
struct CsvRow {
    index: u64,
    seed: u64,
    err_q: Option<f64>,
    err_p: Option<f64>,
    rej_p: Option<f64>,
    rej_q: Option<f64>,
    false_positive: Option<f64>,
    false_negative: Option<f64>,
    opt_plus: Option<f64>,
    rank: Option<usize>,
    success: bool,
    timed_out: bool,
    draws: u64,
    dice0_iterations: Option<usize>,
    dice1_iterations: Option<usize>,
    error: Option<String>,
    wall_ms: f64,
}

impl From<&TrialRecord> for CsvRow {
    fn from(r: &TrialRecord) -> Self {
        CsvRow {
            index: r.index,
            seed: r.seed,
            err_q: r.err_q,
            err_p: r.err_p,
            rej_p: r.rej_p,
            rej_q: r.rej_q,
            false_positive: r.false_positive,
            false_negative: r.false_negative,
            opt_plus: r.opt_plus,
            rank: r.rank,
            success: r.success,
            timed_out: r.timed_out,
            draws: r.draws,
            dice0_iterations: r.trace.as_ref().map(|t| t.dice0.iterations.len()),
            dice1_iterations: r.trace.as_ref().map(|t| t.dice1.iterations.len()),
            error: r.error.clone(),
            wall_ms: r.wall_ms,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nearest_rank_quantiles() {
        let q = Quantiles::of((1..=10).map(f64::from)).unwrap();
        assert_eq!((q.min, q.median, q.q90, q.max, q.mean), (1.0, 5.0, 9.0, 10.0, 5.5));
        assert!(Quantiles::of(std::iter::empty()).is_none());
    }

    #[test]
    fn timing_is_stripped_at_every_depth() {
        let v = serde_json::json!({"wall_ms": 3, "a": [{"elapsed_ms": 1, "b": 2}]});
        assert_eq!(to_json(&v, false), to_json(&serde_json::json!({"a": [{"b": 2}]}), true));
    }
}
