//! Review-log ingestion and interaction-history reconstruction.
//!
//! Input is a CSV with header `user_id,item_id,timestamp,grade`. Grades are
//! binarized into recall outcomes per dialect, histories are rebuilt per
//! (user, item) pair, and each interaction is annotated with the delay since
//! the previous review, the 1-indexed review count, and the Leitner deck
//! position the item occupied when it came up for review.

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::Read;
use thiserror::Error;

const SECONDS_PER_DAY: f64 = 86_400.0;

/// Grade scale in the source logs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dialect {
    /// 0-5 scale; recall means grade >= 2.
    Mnemosyne,
    /// 1-4 self-assessment scale; recall means grade >= 3.
    SelfAssessment,
}

impl Dialect {
    pub fn grade_range(self) -> (u8, u8) {
        match self {
            Dialect::Mnemosyne => (0, 5),
            Dialect::SelfAssessment => (1, 4),
        }
    }
}

/// Unit in which review delays are expressed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeUnit {
    Days,
    Seconds,
}

#[derive(Debug, Error)]
pub enum LogError {
    #[error("line {line}: malformed row: {msg}")]
    Malformed { line: u64, msg: String },
    #[error("line {line}: grade out of range: {grade} not valid for {dialect:?}")]
    GradeOutOfRange { line: u64, grade: i64, dialect: Dialect },
    #[error("line {line}: bad timestamp {value}: must be finite and non-negative")]
    BadTimestamp { line: u64, value: f64 },
    #[error("duplicate timestamp {timestamp} for user {user_id} item {item_id}")]
    DuplicateTimestamp { user_id: String, item_id: String, timestamp: f64 },
    #[error("bad header: expected `user_id,item_id,timestamp,grade`, got `{0}`")]
    BadHeader(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// One observed review interaction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReviewLog {
    pub user_id: String,
    pub item_id: String,
    /// Seconds since epoch; may carry a fractional part.
    pub timestamp: f64,
    pub grade: u8,
    pub outcome: bool,
}

/// A parsed batch of review logs sharing one dialect and time unit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LogSet {
    pub logs: Vec<ReviewLog>,
    pub dialect: Dialect,
    pub time_unit: TimeUnit,
}

/// One review inside a reconstructed history.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Interaction {
    pub timestamp: f64,
    pub outcome: bool,
    /// Time since the previous review of this pair, in the set's time unit.
    /// `None` for the first exposure.
    pub delay: Option<f64>,
    /// 1-indexed count of reviews so far, including this one.
    pub n: u32,
    /// Leitner deck the item was in when this review happened (>= 1),
    /// observed before the outcome is applied.
    pub q: u32,
}

/// Ordered review history of one (user, item) pair.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InteractionHistory {
    pub user_id: String,
    pub item_id: String,
    pub interactions: Vec<Interaction>,
}

/// Map a raw grade to a binary recall outcome.
pub fn binarize_grade(grade: u8, dialect: Dialect) -> Result<bool, LogError> {
    let (lo, hi) = dialect.grade_range();
    if grade < lo || grade > hi {
        return Err(LogError::GradeOutOfRange { line: 0, grade: grade as i64, dialect });
    }
    Ok(match dialect {
        Dialect::Mnemosyne => grade >= 2,
        Dialect::SelfAssessment => grade >= 3,
    })
}

/// Parse a CSV byte stream into a [`LogSet`]. Rows are kept in file order.
pub fn parse_logs<R: Read>(reader: R, dialect: Dialect, time_unit: TimeUnit) -> Result<LogSet, LogError> {
    let mut rdr = csv::ReaderBuilder::new().flexible(false).from_reader(reader);
    {
        let headers = rdr.headers().map_err(|e| LogError::Malformed { line: 1, msg: e.to_string() })?;
        let expected = ["user_id", "item_id", "timestamp", "grade"];
        if headers.iter().collect::<Vec<_>>() != expected {
            return Err(LogError::BadHeader(headers.iter().collect::<Vec<_>>().join(",")));
        }
    }
    let mut logs = Vec::new();
    let mut seen: HashSet<(String, String, u64)> = HashSet::new();
    for record in rdr.records() {
        let record = record.map_err(|e| LogError::Malformed {
            line: e.position().map(|p| p.line()).unwrap_or(0),
            msg: e.to_string(),
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() != 4 {
            return Err(LogError::Malformed { line, msg: format!("expected 4 fields, got {}", record.len()) });
        }
        let user_id = record[0].to_string();
        let item_id = record[1].to_string();
        let timestamp: f64 = record[2]
            .trim()
            .parse()
            .map_err(|_| LogError::Malformed { line, msg: format!("bad timestamp `{}`", &record[2]) })?;
        if !timestamp.is_finite() || timestamp < 0.0 {
            return Err(LogError::BadTimestamp { line, value: timestamp });
        }
        let grade: i64 = record[3]
            .trim()
            .parse()
            .map_err(|_| LogError::Malformed { line, msg: format!("bad grade `{}`", &record[3]) })?;
        let (lo, hi) = dialect.grade_range();
        if grade < lo as i64 || grade > hi as i64 {
            return Err(LogError::GradeOutOfRange { line, grade, dialect });
        }
        let grade = grade as u8;
        if !seen.insert((user_id.clone(), item_id.clone(), timestamp.to_bits())) {
            return Err(LogError::DuplicateTimestamp { user_id, item_id, timestamp });
        }
        let outcome = binarize_grade(grade, dialect)?;
        logs.push(ReviewLog { user_id, item_id, timestamp, grade, outcome });
    }
    Ok(LogSet { logs, dialect, time_unit })
}

/// Iteratively drop users and items with fewer than `k` interactions until
/// a fixed point: removing a user can push an item below threshold and vice
/// versa, so the filter repeats until nothing changes.
pub fn filter_min_interactions(set: LogSet, k: usize) -> LogSet {
    let LogSet { mut logs, dialect, time_unit } = set;
    loop {
        let mut user_counts: HashMap<String, usize> = HashMap::new();
        let mut item_counts: HashMap<String, usize> = HashMap::new();
        for log in &logs {
            *user_counts.entry(log.user_id.clone()).or_default() += 1;
            *item_counts.entry(log.item_id.clone()).or_default() += 1;
        }
        let before = logs.len();
        logs.retain(|log| {
            user_counts.get(&log.user_id).copied().unwrap_or(0) >= k
                && item_counts.get(&log.item_id).copied().unwrap_or(0) >= k
        });
        if logs.len() == before {
            break;
        }
    }
    LogSet { logs, dialect, time_unit }
}

/// Group logs by (user, item), sort by timestamp, and annotate each review
/// with delay / review count / Leitner deck position.
pub fn build_histories(set: &LogSet) -> Result<Vec<InteractionHistory>, LogError> {
    let mut groups: BTreeMap<(&str, &str), Vec<&ReviewLog>> = BTreeMap::new();
    for log in &set.logs {
        groups.entry((&log.user_id, &log.item_id)).or_default().push(log);
    }
    let mut histories = Vec::with_capacity(groups.len());
    for ((user_id, item_id), mut logs) in groups {
        logs.sort_by(|a, b| a.timestamp.partial_cmp(&b.timestamp).unwrap());
        let mut interactions = Vec::with_capacity(logs.len());
        let mut q: u32 = 1;
        for (i, log) in logs.iter().enumerate() {
            let delay = if i == 0 {
                None
            } else {
                let dt = log.timestamp - logs[i - 1].timestamp;
                if dt <= 0.0 {
                    return Err(LogError::DuplicateTimestamp {
                        user_id: user_id.to_string(),
                        item_id: item_id.to_string(),
                        timestamp: log.timestamp,
                    });
                }
                Some(match set.time_unit {
                    TimeUnit::Seconds => dt,
                    TimeUnit::Days => dt / SECONDS_PER_DAY,
                })
            };
            interactions.push(Interaction {
                timestamp: log.timestamp,
                outcome: log.outcome,
                delay,
                n: (i + 1) as u32,
                q,
            });
            q = if log.outcome { q + 1 } else { q.saturating_sub(1).max(1) };
        }
        histories.push(InteractionHistory {
            user_id: user_id.to_string(),
            item_id: item_id.to_string(),
            interactions,
        });
    }
    Ok(histories)
}
