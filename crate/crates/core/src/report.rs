//! Run records and the leader/follower result tables built from them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ArchSolution, Architecture};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Diga,
    GradientDescent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// The leader's best cost fell below the configured threshold.
    StopCost,
    MaxIter,
}

/// One row of the cost curve.
///
/// Gradient-descent runs have no follower, mutation rate or swaps, so those
/// fields are `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationLog {
    pub iteration: usize,
    pub best_cost: f64,
    pub leader_best: f64,
    pub follower_best: Option<f64>,
    pub mutation_rate: Option<f64>,
    pub swapped: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionResult {
    pub arch: Architecture,
    pub cost: f64,
    /// Fraction of training examples classified correctly.
    pub train_accuracy: f64,
    pub test_accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalState {
    pub leader: Vec<SolutionResult>,
    /// Empty for gradient descent.
    pub follower: Vec<SolutionResult>,
    /// Completed update steps.
    pub iterations: usize,
    pub stop_reason: StopReason,
    pub wall_time_secs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub method: Method,
    pub log: Vec<IterationLog>,
    pub final_state: Option<FinalState>,
}

impl RunRecord {
    pub fn new(method: Method) -> Self {
        Self {
            method,
            log: Vec::new(),
            final_state: None,
        }
    }

    pub fn swap_count(&self) -> usize {
        self.log.iter().filter(|r| r.swapped == Some(true)).count()
    }

    /// Number of swaps logged with `from <= iteration < to`.
    pub fn swaps_between(&self, from: usize, to: usize) -> usize {
        self.log
            .iter()
            .filter(|r| r.iteration >= from && r.iteration < to && r.swapped == Some(true))
            .count()
    }
}

/// Marker printed in place of a missing test accuracy.
pub const ABSENT: &str = "n/a";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub layer_dims: Vec<usize>,
    pub cost: f64,
    /// Percent.
    pub train_accuracy: f64,
    /// Percent.
    pub test_accuracy: Option<f64>,
    /// Architecture and cost, e.g. `[12288, 17, 4, 1, 0.05926]`.
    pub label: String,
    /// Train/test percentages, e.g. `99.04/80`.
    pub accuracy: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub method: Method,
    pub iterations: usize,
    pub stop_reason: StopReason,
    pub leader: Vec<ReportRow>,
    pub follower: Vec<ReportRow>,
}

/// Percentage with at most two decimals and no trailing zeros.
pub fn format_percent(p: f64) -> String {
    let s = format!("{p:.2}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    s.to_string()
}

fn row(s: &SolutionResult) -> ReportRow {
    let train = s.train_accuracy * 100.0;
    let test = s.test_accuracy.map(|t| t * 100.0);
    ReportRow {
        layer_dims: s.arch.dims().to_vec(),
        cost: s.cost,
        train_accuracy: train,
        test_accuracy: test,
        label: ArchSolution::new(s.arch.clone(), s.cost).to_string(),
        accuracy: format!(
            "{}/{}",
            format_percent(train),
            test.map_or_else(|| ABSENT.to_string(), format_percent)
        ),
    }
}

/// Leader and follower tables, one row per solution in stored (sorted) order.
pub fn final_report(record: &RunRecord) -> Result<Report> {
    let fin = record.final_state.as_ref().ok_or(Error::Unfinalized)?;
    Ok(Report {
        method: record.method,
        iterations: fin.iterations,
        stop_reason: fin.stop_reason,
        leader: fin.leader.iter().map(row).collect(),
        follower: fin.follower.iter().map(row).collect(),
    })
}
