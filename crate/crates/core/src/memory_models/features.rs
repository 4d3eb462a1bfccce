//! Per-review feature extraction from interaction histories.

use crate::log_store::InteractionHistory;
use serde::{Deserialize, Serialize};

/// Summary statistics of a nonempty sequence.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SummaryStats {
    pub mean: f64,
    pub median: f64,
    pub min: f64,
    pub max: f64,
    pub range: f64,
    pub len: f64,
    pub first: f64,
    pub last: f64,
}

impl SummaryStats {
    pub fn from_values(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = sorted.len();
        let median = if n % 2 == 1 {
            sorted[n / 2]
        } else {
            0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
        };
        let min = sorted[0];
        let max = sorted[n - 1];
        Some(SummaryStats {
            mean: values.iter().sum::<f64>() / n as f64,
            median,
            min,
            max,
            range: max - min,
            len: n as f64,
            first: values[0],
            last: values[n - 1],
        })
    }

    pub fn to_array(self) -> [f64; 8] {
        [self.mean, self.median, self.min, self.max, self.range, self.len, self.first, self.last]
    }
}

/// Statistics of the previous review intervals and outcomes of a pair,
/// available once at least one previous interval exists.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct HistoryStats {
    pub intervals: SummaryStats,
    pub outcomes: SummaryStats,
}

/// Everything a memory model may consume for one review.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeatureVector {
    /// Time since previous review; `None` on first exposure.
    pub delay: Option<f64>,
    /// 1-indexed review count including this review.
    pub n: u32,
    /// Leitner deck position at review time (>= 1).
    pub q: u32,
    pub user_id: String,
    pub item_id: String,
    pub history_stats: Option<HistoryStats>,
}

/// Build the feature vector for interaction `idx` of a history, using only
/// the interactions strictly before it.
pub fn extract_features(history: &InteractionHistory, idx: usize) -> FeatureVector {
    let x = &history.interactions[idx];
    let prev_intervals: Vec<f64> = history.interactions[..idx]
        .iter()
        .filter_map(|i| i.delay)
        .collect();
    let prev_outcomes: Vec<f64> = history.interactions[..idx]
        .iter()
        .map(|i| if i.outcome { 1.0 } else { 0.0 })
        .collect();
    let history_stats = match (
        SummaryStats::from_values(&prev_intervals),
        SummaryStats::from_values(&prev_outcomes),
    ) {
        (Some(intervals), Some(outcomes)) => Some(HistoryStats { intervals, outcomes }),
        _ => None,
    };
    FeatureVector {
        delay: x.delay,
        n: x.n,
        q: x.q,
        user_id: history.user_id.clone(),
        item_id: history.item_id.clone(),
        history_stats,
    }
}

/// Feature rows with outcomes for every interaction of every history.
pub fn training_rows(histories: &[InteractionHistory]) -> Vec<(FeatureVector, bool)> {
    let mut rows = Vec::new();
    for h in histories {
        for idx in 0..h.interactions.len() {
            rows.push((extract_features(h, idx), h.interactions[idx].outcome));
        }
    }
    rows
}
