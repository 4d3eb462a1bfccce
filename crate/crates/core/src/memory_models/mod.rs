//! Recall-probability models and fitting.
//!
//! Fourteen model variants are supported, addressable by a numeric id:
//! ids 1-3 are the 0PL/1PL IRT benchmarks, 4 is logistic regression over
//! review-history statistics, and 5-14 are the exponential forgetting
//! curve combinations of {global, per-item} difficulty x {review count,
//! constant, Leitner deck} strength x {with, without} delay.

pub mod efc;
pub mod features;
pub mod irt;
pub mod logreg;

pub use efc::{fit_efc_global, fit_efc_per_item, DelayMode, Difficulty, EfcModel, StrengthMode};
pub use features::{extract_features, training_rows, FeatureVector, HistoryStats, SummaryStats};
pub use irt::{fit_irt, IrtModel, IrtVariant};
pub use logreg::{fit_logreg, LogRegModel};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("model requires a delay but the feature row has none (first exposure)")]
    MissingDelay,
    #[error("model requires history statistics but the feature row has none")]
    MissingHistoryStats,
}

#[derive(Debug, Error)]
pub enum FitError {
    #[error("training set is empty (or has no usable rows for this model)")]
    EmptyTrainingSet,
    #[error("unidentifiable without penalty: {0}")]
    Unidentifiable(String),
}

/// A fitted recall predictor.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MemoryModel {
    Efc(EfcModel),
    Irt(IrtModel),
    LogReg(LogRegModel),
}

impl MemoryModel {
    pub fn predict_recall(&self, f: &FeatureVector) -> Result<f64, ModelError> {
        match self {
            MemoryModel::Efc(m) => m.predict(f),
            MemoryModel::Irt(m) => m.predict(f),
            MemoryModel::LogReg(m) => m.predict(f),
        }
    }
}

/// An unfitted model variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ModelSpec {
    Irt0User,
    Irt0Item,
    Irt1,
    LogReg,
    Efc {
        difficulty: EfcDifficultyMode,
        strength: StrengthMode,
        delay: DelayMode,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EfcDifficultyMode {
    Global,
    PerItem,
}

#[derive(Debug, Error)]
#[error("unknown model `{input}`; valid ids are 1-14 (or names {names})", names = VALID_NAMES)]
pub struct UnknownModel {
    pub input: String,
}

const VALID_NAMES: &str = "irt0-user, irt0-item, irt1, logreg";

impl ModelSpec {
    /// Numeric id of this variant (IRT benchmarks 1-3, logistic regression 4,
    /// forgetting curves 5-14).
    pub fn table_row(&self) -> u8 {
        use DelayMode::*;
        use EfcDifficultyMode::*;
        use StrengthMode::*;
        match self {
            ModelSpec::Irt0User => 1,
            ModelSpec::Irt0Item => 2,
            ModelSpec::Irt1 => 3,
            ModelSpec::LogReg => 4,
            ModelSpec::Efc { difficulty, strength, delay } => match (difficulty, strength, delay) {
                (Global, NReviews, WithDelay) => 5,
                (Global, Constant, WithDelay) => 6,
                (Global, NReviews, WithoutDelay) => 7,
                (Global, LeitnerQ, WithDelay) => 8,
                (Global, LeitnerQ, WithoutDelay) => 9,
                (PerItem, NReviews, WithDelay) => 10,
                (PerItem, Constant, WithDelay) => 11,
                (PerItem, NReviews, WithoutDelay) => 12,
                (PerItem, LeitnerQ, WithDelay) => 13,
                (PerItem, LeitnerQ, WithoutDelay) => 14,
                // constant strength without a delay term is not one of the
                // 14 catalogued variants
                (_, Constant, WithoutDelay) => 0,
            },
        }
    }

    pub fn from_row(row: u8) -> Option<ModelSpec> {
        use DelayMode::*;
        use EfcDifficultyMode::*;
        use StrengthMode::*;
        let efc = |difficulty, strength, delay| ModelSpec::Efc { difficulty, strength, delay };
        Some(match row {
            1 => ModelSpec::Irt0User,
            2 => ModelSpec::Irt0Item,
            3 => ModelSpec::Irt1,
            4 => ModelSpec::LogReg,
            5 => efc(Global, NReviews, WithDelay),
            6 => efc(Global, Constant, WithDelay),
            7 => efc(Global, NReviews, WithoutDelay),
            8 => efc(Global, LeitnerQ, WithDelay),
            9 => efc(Global, LeitnerQ, WithoutDelay),
            10 => efc(PerItem, NReviews, WithDelay),
            11 => efc(PerItem, Constant, WithDelay),
            12 => efc(PerItem, NReviews, WithoutDelay),
            13 => efc(PerItem, LeitnerQ, WithDelay),
            14 => efc(PerItem, LeitnerQ, WithoutDelay),
            _ => return None,
        })
    }

    pub fn parse(input: &str) -> Result<ModelSpec, UnknownModel> {
        if let Ok(row) = input.trim().parse::<u8>() {
            return ModelSpec::from_row(row).ok_or_else(|| UnknownModel { input: input.into() });
        }
        match input.trim() {
            "irt0-user" => Ok(ModelSpec::Irt0User),
            "irt0-item" => Ok(ModelSpec::Irt0Item),
            "irt1" => Ok(ModelSpec::Irt1),
            "logreg" => Ok(ModelSpec::LogReg),
            _ => Err(UnknownModel { input: input.into() }),
        }
    }

    pub fn name(&self) -> String {
        format!("model-{}", self.table_row())
    }

    /// Whether this spec is a MAP fit whose penalty is chosen on validation data.
    pub fn needs_l2(&self) -> bool {
        matches!(self, ModelSpec::Irt1 | ModelSpec::LogReg | ModelSpec::Irt0User | ModelSpec::Irt0Item)
    }

    /// Fit this variant on training rows. `l2` applies to the MAP-estimated
    /// families and is ignored by the forgetting curves.
    pub fn fit(&self, train: &[(FeatureVector, bool)], l2: f64) -> Result<MemoryModel, FitError> {
        match self {
            ModelSpec::Irt0User => Ok(MemoryModel::Irt(fit_irt(train, IrtVariant::UserOnly, l2)?)),
            ModelSpec::Irt0Item => Ok(MemoryModel::Irt(fit_irt(train, IrtVariant::ItemOnly, l2)?)),
            ModelSpec::Irt1 => Ok(MemoryModel::Irt(fit_irt(train, IrtVariant::Full, l2)?)),
            ModelSpec::LogReg => Ok(MemoryModel::LogReg(fit_logreg(train, l2)?)),
            ModelSpec::Efc { difficulty, strength, delay } => {
                let difficulty = match difficulty {
                    EfcDifficultyMode::Global => {
                        Difficulty::Global(fit_efc_global(train, *strength, *delay)?)
                    }
                    EfcDifficultyMode::PerItem => fit_efc_per_item(train, *strength, *delay)?,
                };
                Ok(MemoryModel::Efc(EfcModel {
                    strength: *strength,
                    delay: *delay,
                    difficulty,
                }))
            }
        }
    }
}

/// A fitted model with enough metadata to reproduce the fit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FittedModel {
    pub spec: ModelSpec,
    pub model: MemoryModel,
    pub fit_metadata: FitMetadata,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitMetadata {
    pub seed: u64,
    pub l2: f64,
    pub time_unit: Option<crate::log_store::TimeUnit>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_round_trip_through_ids() {
        for row in 1..=14u8 {
            let spec = ModelSpec::from_row(row).unwrap();
            assert_eq!(spec.table_row(), row);
        }
        assert!(ModelSpec::from_row(0).is_none());
        assert!(ModelSpec::from_row(15).is_none());
    }

    #[test]
    fn parse_accepts_rows_and_names() {
        assert_eq!(ModelSpec::parse("8").unwrap().table_row(), 8);
        assert_eq!(ModelSpec::parse("irt1").unwrap(), ModelSpec::Irt1);
        assert!(ModelSpec::parse("nonsense").is_err());
        assert!(ModelSpec::parse("15").is_err());
    }

    #[test]
    fn fitted_model_serializes_deterministically() {
        let spec = ModelSpec::from_row(8).unwrap();
        let rows = vec![
            (
                FeatureVector {
                    delay: Some(3.0),
                    n: 2,
                    q: 1,
                    user_id: "u".into(),
                    item_id: "i".into(),
                    history_stats: None,
                },
                true,
            ),
            (
                FeatureVector {
                    delay: Some(30.0),
                    n: 3,
                    q: 1,
                    user_id: "u".into(),
                    item_id: "i".into(),
                    history_stats: None,
                },
                false,
            ),
        ];
        let fitted = FittedModel {
            spec,
            model: spec.fit(&rows, 0.0).unwrap(),
            fit_metadata: FitMetadata { seed: 0, l2: 0.0, time_unit: None },
        };
        let a = serde_json::to_string(&fitted).unwrap();
        let b = serde_json::to_string(&fitted).unwrap();
        assert_eq!(a, b);
        assert!(a.contains("efc"));
    }
}
