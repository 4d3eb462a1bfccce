//! Exponential forgetting curve models and their maximum-likelihood fits.
//!
//! Recall probability is `exp(-theta * d / s)` where the difficulty `theta`
//! is global or item-specific, the strength `s` is 1, the review count, or
//! the Leitner deck position, and the delay factor `d` may be dropped
//! entirely (in which case the probability is `exp(-theta / s)`).

use super::features::FeatureVector;
use super::{FitError, ModelError};
use crate::optim::golden_section_max;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

pub const THETA_MIN: f64 = 1e-6;
pub const THETA_MAX: f64 = 1e3;

/// Relative tolerance of the 1-D likelihood search.
const FIT_REL_TOL: f64 = 1e-8;
/// Probabilities are clamped away from {0, 1} inside log-likelihoods.
const P_EPS: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrengthMode {
    Constant,
    NReviews,
    LeitnerQ,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DelayMode {
    WithDelay,
    WithoutDelay,
}

/// Fitted difficulty: one global value or a per-item map with a fallback
/// (the mean fitted value) for items unseen in training.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Difficulty {
    Global(f64),
    PerItem { theta: BTreeMap<String, f64>, fallback: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EfcModel {
    pub strength: StrengthMode,
    pub delay: DelayMode,
    pub difficulty: Difficulty,
}

impl EfcModel {
    /// The decay exponent scale `e` such that `P[recall] = exp(-theta * e)`,
    /// or `None` when the model needs a delay the row does not carry.
    fn exponent_scale(strength: StrengthMode, delay: DelayMode, f: &FeatureVector) -> Option<f64> {
        let s = match strength {
            StrengthMode::Constant => 1.0,
            StrengthMode::NReviews => f.n as f64,
            StrengthMode::LeitnerQ => f.q as f64,
        };
        match delay {
            DelayMode::WithDelay => f.delay.map(|d| d / s),
            DelayMode::WithoutDelay => Some(1.0 / s),
        }
    }

    pub fn theta_for(&self, item_id: &str) -> f64 {
        match &self.difficulty {
            Difficulty::Global(theta) => *theta,
            Difficulty::PerItem { theta, fallback } => theta.get(item_id).copied().unwrap_or(*fallback),
        }
    }

    pub fn predict(&self, f: &FeatureVector) -> Result<f64, ModelError> {
        let e = Self::exponent_scale(self.strength, self.delay, f).ok_or(ModelError::MissingDelay)?;
        Ok((-self.theta_for(&f.item_id) * e).exp())
    }
}

fn log_likelihood(theta: f64, rows: &[(f64, bool)]) -> f64 {
    rows.iter()
        .map(|&(e, y)| {
            let p = (-theta * e).exp().clamp(P_EPS, 1.0 - P_EPS);
            if y {
                p.ln()
            } else {
                (1.0 - p).ln()
            }
        })
        .sum()
}

/// Rows reduced to (exponent scale, outcome); rows lacking the needed delay
/// are dropped (the first exposure of a pair has no delay).
fn usable_rows(train: &[(FeatureVector, bool)], strength: StrengthMode, delay: DelayMode) -> Vec<(f64, bool)> {
    train
        .iter()
        .filter_map(|(f, y)| EfcModel::exponent_scale(strength, delay, f).map(|e| (e, *y)))
        .collect()
}

fn fit_theta(rows: &[(f64, bool)]) -> Result<f64, FitError> {
    if rows.is_empty() {
        return Err(FitError::EmptyTrainingSet);
    }
    // The log-likelihood is unimodal in theta; search in log space so the
    // absolute tolerance is a relative tolerance on theta.
    let log_theta = golden_section_max(
        |lt| log_likelihood(lt.exp(), rows),
        THETA_MIN.ln(),
        THETA_MAX.ln(),
        FIT_REL_TOL,
        400,
    );
    let theta = log_theta.exp();
    // Snap boundary solutions (all-pass or all-fail data) to the bounds.
    if log_likelihood(THETA_MIN, rows) >= log_likelihood(theta, rows) {
        return Ok(THETA_MIN);
    }
    if log_likelihood(THETA_MAX, rows) >= log_likelihood(theta, rows) {
        return Ok(THETA_MAX);
    }
    Ok(theta)
}

/// Maximum-likelihood fit of a global difficulty.
pub fn fit_efc_global(
    train: &[(FeatureVector, bool)],
    strength: StrengthMode,
    delay: DelayMode,
) -> Result<f64, FitError> {
    fit_theta(&usable_rows(train, strength, delay))
}

/// Independent per-item maximum-likelihood fits; the fallback difficulty is
/// the mean of the fitted values.
pub fn fit_efc_per_item(
    train: &[(FeatureVector, bool)],
    strength: StrengthMode,
    delay: DelayMode,
) -> Result<Difficulty, FitError> {
    let mut per_item: BTreeMap<String, Vec<(f64, bool)>> = BTreeMap::new();
    for (f, y) in train {
        if let Some(e) = EfcModel::exponent_scale(strength, delay, f) {
            per_item.entry(f.item_id.clone()).or_default().push((e, *y));
        }
    }
    if per_item.is_empty() {
        return Err(FitError::EmptyTrainingSet);
    }
    let mut theta = BTreeMap::new();
    for (item, rows) in per_item {
        theta.insert(item, fit_theta(&rows)?);
    }
    let fallback = theta.values().sum::<f64>() / theta.len() as f64;
    Ok(Difficulty::PerItem { theta, fallback })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn feat(delay: Option<f64>, n: u32, q: u32, item: &str) -> FeatureVector {
        FeatureVector {
            delay,
            n,
            q,
            user_id: "u".into(),
            item_id: item.into(),
            history_stats: None,
        }
    }

    fn q_delay_model(theta: f64) -> EfcModel {
        EfcModel {
            strength: StrengthMode::LeitnerQ,
            delay: DelayMode::WithDelay,
            difficulty: Difficulty::Global(theta),
        }
    }

    #[test]
    fn predict_zero_delay_is_certain_recall() {
        let m = q_delay_model(0.0077);
        assert_abs_diff_eq!(m.predict(&feat(Some(0.0), 1, 3, "i")).unwrap(), 1.0);
    }

    #[test]
    fn predict_unit_case() {
        let m = q_delay_model(1.0);
        assert_abs_diff_eq!(
            m.predict(&feat(Some(1.0), 1, 1, "i")).unwrap(),
            (-1.0f64).exp(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn predict_scalar_evaluation() {
        // theta=0.0077, d=90, q=2 -> exp(-0.3465)
        let m = q_delay_model(0.0077);
        assert_abs_diff_eq!(
            m.predict(&feat(Some(90.0), 1, 2, "i")).unwrap(),
            0.70716,
            epsilon = 5e-6
        );
    }

    #[test]
    fn predict_without_delay_uses_strength_only() {
        let m = EfcModel {
            strength: StrengthMode::LeitnerQ,
            delay: DelayMode::WithoutDelay,
            difficulty: Difficulty::Global(2.0),
        };
        assert_abs_diff_eq!(
            m.predict(&feat(None, 1, 4, "i")).unwrap(),
            (-0.5f64).exp(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn predict_missing_delay_errors() {
        let m = q_delay_model(0.01);
        assert!(matches!(m.predict(&feat(None, 1, 1, "i")), Err(ModelError::MissingDelay)));
    }

    #[test]
    fn predict_unseen_item_uses_fallback() {
        let m = EfcModel {
            strength: StrengthMode::LeitnerQ,
            delay: DelayMode::WithDelay,
            difficulty: Difficulty::PerItem {
                theta: BTreeMap::from([("a".to_string(), 0.5)]),
                fallback: 0.25,
            },
        };
        assert_abs_diff_eq!(
            m.predict(&feat(Some(1.0), 1, 1, "zzz")).unwrap(),
            (-0.25f64).exp(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn single_positive_row_clamps_to_theta_min() {
        let train = vec![(feat(Some(1.0), 1, 1, "i"), true)];
        let theta = fit_efc_global(&train, StrengthMode::LeitnerQ, DelayMode::WithDelay).unwrap();
        assert_eq!(theta, THETA_MIN);
    }

    #[test]
    fn single_negative_row_clamps_to_theta_max() {
        let train = vec![(feat(Some(1.0), 1, 1, "i"), false)];
        let theta = fit_efc_global(&train, StrengthMode::LeitnerQ, DelayMode::WithDelay).unwrap();
        assert_eq!(theta, THETA_MAX);
    }

    fn synthetic_rows(theta: f64, count: usize, seed: u64, item: &str) -> Vec<(FeatureVector, bool)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count)
            .map(|_| {
                let d = rng.gen_range(1.0..200.0);
                let q = rng.gen_range(1..=5u32);
                let p = (-theta * d / q as f64).exp();
                let y = rng.gen_bool(p);
                (feat(Some(d), 1, q, item), y)
            })
            .collect()
    }

    #[test]
    fn recovers_global_theta_from_synthetic_data() {
        let theta_true = 0.01;
        let train = synthetic_rows(theta_true, 100_000, 11, "i");
        let theta = fit_efc_global(&train, StrengthMode::LeitnerQ, DelayMode::WithDelay).unwrap();
        assert!(
            (theta - theta_true).abs() / theta_true < 0.05,
            "recovered {theta}, wanted within 5% of {theta_true}"
        );
    }

    #[test]
    fn recovers_per_item_thetas() {
        let mut train = synthetic_rows(0.005, 10_000, 21, "a");
        train.extend(synthetic_rows(0.05, 10_000, 22, "b"));
        let diff = fit_efc_per_item(&train, StrengthMode::LeitnerQ, DelayMode::WithDelay).unwrap();
        let Difficulty::PerItem { theta, .. } = &diff else { panic!() };
        assert!((theta["a"] - 0.005).abs() / 0.005 < 0.10, "a: {}", theta["a"]);
        assert!((theta["b"] - 0.05).abs() / 0.05 < 0.10, "b: {}", theta["b"]);
    }

    #[test]
    fn identical_items_get_identical_thetas() {
        let rows_a = synthetic_rows(0.02, 500, 5, "a");
        let mut train = rows_a.clone();
        train.extend(rows_a.iter().map(|(f, y)| {
            let mut f = f.clone();
            f.item_id = "b".into();
            (f, *y)
        }));
        let diff = fit_efc_per_item(&train, StrengthMode::LeitnerQ, DelayMode::WithDelay).unwrap();
        let Difficulty::PerItem { theta, .. } = &diff else { panic!() };
        assert_abs_diff_eq!(theta["a"], theta["b"], epsilon = 1e-12);
    }

    #[test]
    fn all_recalls_item_hits_theta_min() {
        let train: Vec<_> = (0..20)
            .map(|i| (feat(Some(1.0 + i as f64), 1, 1, "easy"), true))
            .collect();
        let diff = fit_efc_per_item(&train, StrengthMode::LeitnerQ, DelayMode::WithDelay).unwrap();
        let Difficulty::PerItem { theta, .. } = &diff else { panic!() };
        assert_eq!(theta["easy"], THETA_MIN);
    }

    #[test]
    fn fitted_theta_beats_perturbations() {
        let train = synthetic_rows(0.02, 5_000, 33, "i");
        let theta = fit_efc_global(&train, StrengthMode::LeitnerQ, DelayMode::WithDelay).unwrap();
        let rows = usable_rows(&train, StrengthMode::LeitnerQ, DelayMode::WithDelay);
        let best = log_likelihood(theta, &rows);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let perturbed = (theta * rng.gen_range(0.5..2.0)).clamp(THETA_MIN, THETA_MAX);
            assert!(log_likelihood(perturbed, &rows) <= best + 1e-9);
        }
    }

    #[test]
    fn probability_monotone_in_delay_and_theta() {
        let m = q_delay_model(0.1);
        let p1 = m.predict(&feat(Some(1.0), 1, 2, "i")).unwrap();
        let p2 = m.predict(&feat(Some(2.0), 1, 2, "i")).unwrap();
        assert!(p2 < p1);
        let harder = q_delay_model(0.2);
        assert!(harder.predict(&feat(Some(1.0), 1, 2, "i")).unwrap() < p1);
        // non-decreasing in strength
        let p_q3 = m.predict(&feat(Some(1.0), 1, 3, "i")).unwrap();
        assert!(p_q3 >= p1);
    }
}
