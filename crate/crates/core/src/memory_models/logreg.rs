//! Logistic regression over summary statistics of previous review
//! intervals and outcomes, fit by MAP estimation with an L2 penalty on
//! the coefficients (the intercept is unpenalized).

use super::features::FeatureVector;
use super::irt::{ascend, logistic};
use super::{FitError, ModelError};
use serde::{Deserialize, Serialize};

/// 8 interval statistics followed by 8 outcome statistics.
pub const FEATURE_NAMES: [&str; 16] = [
    "interval_mean",
    "interval_median",
    "interval_min",
    "interval_max",
    "interval_range",
    "interval_len",
    "interval_first",
    "interval_last",
    "outcome_mean",
    "outcome_median",
    "outcome_min",
    "outcome_max",
    "outcome_range",
    "outcome_len",
    "outcome_first",
    "outcome_last",
];

pub const N_FEATURES: usize = 16;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LogRegModel {
    pub intercept: f64,
    /// Coefficients over the standardized feature list.
    pub coefficients: Vec<f64>,
    pub feature_means: Vec<f64>,
    pub feature_stds: Vec<f64>,
    /// Names of constant training features whose coefficients were pinned to 0.
    pub pinned_features: Vec<String>,
    pub l2: f64,
}

fn raw_features(f: &FeatureVector) -> Option<[f64; N_FEATURES]> {
    let stats = f.history_stats?;
    let a = stats.intervals.to_array();
    let b = stats.outcomes.to_array();
    let mut out = [0.0; N_FEATURES];
    out[..8].copy_from_slice(&a);
    out[8..].copy_from_slice(&b);
    Some(out)
}

impl LogRegModel {
    pub fn predict(&self, f: &FeatureVector) -> Result<f64, ModelError> {
        let raw = raw_features(f).ok_or(ModelError::MissingHistoryStats)?;
        let mut z = self.intercept;
        for k in 0..N_FEATURES {
            if self.feature_stds[k] > 0.0 {
                z += self.coefficients[k] * (raw[k] - self.feature_means[k]) / self.feature_stds[k];
            }
        }
        Ok(logistic(z))
    }
}

/// Penalized objective and gradient over params = [intercept, coefs...],
/// on already-standardized rows. Public for finite-difference checks.
pub fn logreg_objective_and_gradient(
    rows: &[([f64; N_FEATURES], bool)],
    active: &[bool],
    l2: f64,
    params: &[f64],
) -> (f64, Vec<f64>) {
    let mut ll = 0.0;
    let mut grad = vec![0.0; params.len()];
    for (x, y) in rows {
        let mut z = params[0];
        for k in 0..N_FEATURES {
            if active[k] {
                z += params[k + 1] * x[k];
            }
        }
        let log_sigma = -softplus(-z);
        ll += if *y { log_sigma } else { -z + log_sigma };
        let resid = (if *y { 1.0 } else { 0.0 }) - logistic(z);
        grad[0] += resid;
        for k in 0..N_FEATURES {
            if active[k] {
                grad[k + 1] += resid * x[k];
            }
        }
    }
    // intercept unpenalized
    for k in 0..N_FEATURES {
        if active[k] {
            grad[k + 1] -= l2 * params[k + 1];
            ll -= 0.5 * l2 * params[k + 1] * params[k + 1];
        }
    }
    (ll, grad)
}

fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else {
        (1.0 + x.exp()).ln()
    }
}

/// Standardize the usable rows of a training set; returns the standardized
/// design, the means/stds, and the active-feature mask.
pub fn standardize(
    train: &[(FeatureVector, bool)],
) -> Option<(Vec<([f64; N_FEATURES], bool)>, Vec<f64>, Vec<f64>, Vec<bool>)> {
    let raw: Vec<([f64; N_FEATURES], bool)> = train
        .iter()
        .filter_map(|(f, y)| raw_features(f).map(|x| (x, *y)))
        .collect();
    if raw.is_empty() {
        return None;
    }
    let n = raw.len() as f64;
    let mut means = vec![0.0; N_FEATURES];
    let mut stds = vec![0.0; N_FEATURES];
    for (x, _) in &raw {
        for k in 0..N_FEATURES {
            means[k] += x[k] / n;
        }
    }
    for (x, _) in &raw {
        for k in 0..N_FEATURES {
            stds[k] += (x[k] - means[k]).powi(2) / n;
        }
    }
    let mut active = vec![false; N_FEATURES];
    for k in 0..N_FEATURES {
        stds[k] = stds[k].sqrt();
        if stds[k] > 1e-12 {
            active[k] = true;
        } else {
            stds[k] = 0.0;
        }
    }
    let design = raw
        .into_iter()
        .map(|(x, y)| {
            let mut z = [0.0; N_FEATURES];
            for k in 0..N_FEATURES {
                if active[k] {
                    z[k] = (x[k] - means[k]) / stds[k];
                }
            }
            (z, y)
        })
        .collect();
    Some((design, means, stds, active))
}

/// Fit logistic regression; rows lacking history statistics are dropped.
pub fn fit_logreg(train: &[(FeatureVector, bool)], l2: f64) -> Result<LogRegModel, FitError> {
    let (design, means, stds, active) =
        standardize(train).ok_or(FitError::EmptyTrainingSet)?;
    let (params, _) = ascend(
        &|p| logreg_objective_and_gradient(&design, &active, l2, p),
        N_FEATURES + 1,
    );
    let pinned = active
        .iter()
        .enumerate()
        .filter(|(_, a)| !**a)
        .map(|(k, _)| FEATURE_NAMES[k].to_string())
        .collect();
    Ok(LogRegModel {
        intercept: params[0],
        coefficients: params[1..].to_vec(),
        feature_means: means,
        feature_stds: stds,
        pinned_features: pinned,
        l2,
    })
}
