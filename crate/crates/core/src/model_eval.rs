//! Truncated-history cross-validation and AUC scoring of recall models.
//!
//! Pairs (user, item) are split into a held-out test set and `fold_count`
//! folds. Within a fold, 10% of the remaining pairs have their histories
//! truncated at a random point; models train on all full histories plus the
//! truncated prefixes and are scored on the single interaction immediately
//! following each truncation.

use std::collections::BTreeMap;
use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::log_store::InteractionHistory;
use crate::memory_models::{extract_features, FeatureVector, ModelSpec};

/// Penalty grid searched per fold for the MAP-fitted families, by
/// validation log-likelihood.
pub const L2_GRID: [f64; 5] = [1e-3, 1e-2, 1e-1, 1.0, 10.0];

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("need at least {need} user-item pairs, got {got}")]
    TooFewPairs { need: usize, got: usize },
    #[error("history for pair {0}/{1} has fewer than 2 interactions")]
    ShortHistory(String, String),
    #[error("AUC undefined: labels contain only one class")]
    SingleClass,
    #[error("fold plan does not match the histories (pair count {plan} vs {given})")]
    PlanMismatch { plan: usize, given: usize },
    #[error("model fit failed: {0}")]
    Fit(#[from] crate::memory_models::FitError),
}

/// Assignment of one cross-validation layout: which pairs are held out for
/// testing, and which pairs each fold truncates (and where).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub seed: u64,
    pub fold_count: usize,
    pub pair_count: usize,
    /// Held-out pairs as (pair index, truncation index).
    pub test: Vec<(usize, usize)>,
    pub folds: Vec<Fold>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    /// Truncated pairs as (pair index, truncation index); the pair's
    /// interactions `[0, t)` are training data and interaction `t` is the
    /// fold's validation point for that pair.
    pub truncated: Vec<(usize, usize)>,
}

/// Lay out test/fold assignments and truncation points. Deterministic in
/// `seed`. Truncation indices are uniform on `{1, …, len−1}` so at least
/// one interaction is trainable and one is scorable.
pub fn make_fold_plan(
    histories: &[InteractionHistory],
    fold_count: usize,
    test_frac: f64,
    trunc_frac: f64,
    seed: u64,
) -> Result<FoldPlan, EvalError> {
    let n = histories.len();
    if n < fold_count || fold_count == 0 {
        return Err(EvalError::TooFewPairs { need: fold_count.max(1), got: n });
    }
    for h in histories {
        if h.interactions.len() < 2 {
            return Err(EvalError::ShortHistory(h.user_id.clone(), h.item_id.clone()));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);

    let n_test = ((test_frac * n as f64).round() as usize).min(n.saturating_sub(fold_count));
    let draw_trunc = |rng: &mut ChaCha8Rng, pair: usize| {
        let len = histories[pair].interactions.len();
        rng.gen_range(1..len)
    };
    let test: Vec<(usize, usize)> = order[..n_test]
        .iter()
        .map(|&p| (p, draw_trunc(&mut rng, p)))
        .collect();
    let pool: Vec<usize> = order[n_test..].to_vec();

    // per-fold truncated count; circular slicing of the shuffled pool gives
    // exact single coverage in the canonical fold_count = 1/trunc_frac case
    let per_fold = ((trunc_frac * pool.len() as f64).round() as usize)
        .clamp(1, pool.len());
    let folds = (0..fold_count)
        .map(|f| {
            let truncated = (0..per_fold)
                .map(|j| {
                    let p = pool[(f * per_fold + j) % pool.len()];
                    (p, draw_trunc(&mut rng, p))
                })
                .collect();
            Fold { truncated }
        })
        .collect();
    Ok(FoldPlan { seed, fold_count, pair_count: n, test, folds })
}

/// Mann-Whitney AUC with half credit for ties.
pub fn auc(scores: &[f64], labels: &[bool]) -> Result<f64, EvalError> {
    assert_eq!(scores.len(), labels.len());
    let pos = labels.iter().filter(|&&y| y).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(EvalError::SingleClass);
    }
    // rank-sum with average ranks over tied groups
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap());
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j < idx.len() && scores[idx[j]] == scores[idx[i]] {
            j += 1;
        }
        let avg_rank = 0.5 * ((i + 1) + j) as f64; // 1-based ranks i+1..=j
        for &k in &idx[i..j] {
            if labels[k] {
                rank_sum_pos += avg_rank;
            }
        }
        i = j;
    }
    let u = rank_sum_pos - 0.5 * (pos * (pos + 1)) as f64;
    Ok(u / (pos as f64 * neg as f64))
}

/// One scored group of validation points.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalCell {
    pub model: String,
    /// Fold index, or `None` for the held-out test evaluation.
    pub fold: Option<usize>,
    /// `"all"` or a deck bin (`"q1"`..`"q5"`, `"q6+"`).
    pub bin: String,
    /// Absent when the bin was empty, single-class, or unscorable.
    pub auc: Option<f64>,
    pub positives: usize,
    pub negatives: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelSummary {
    pub model: String,
    pub fold_auc: Vec<Option<f64>>,
    pub mean_validation_auc: Option<f64>,
    /// Sample std of the per-fold AUCs divided by sqrt(#folds scored).
    pub stderr: Option<f64>,
    pub test_auc: Option<f64>,
    /// Penalty chosen per fold (0 for models that take none).
    pub l2_by_fold: Vec<f64>,
    pub l2_test: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub fold_count: usize,
    pub models: Vec<ModelSummary>,
    pub cells: Vec<EvalCell>,
}

impl EvalReport {
    /// Long-format CSV: `model,fold,bin,auc,positives,negatives`; the test
    /// evaluation appears with fold = `test`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("model,fold,bin,auc,positives,negatives\n");
        for c in &self.cells {
            let fold = c.fold.map_or("test".to_string(), |f| f.to_string());
            let auc = c.auc.map_or(String::new(), |a| format!("{a}"));
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                c.model, fold, c.bin, auc, c.positives, c.negatives
            ));
        }
        out
    }
}

fn deck_bin(q: u32) -> String {
    if q >= 6 {
        "q6+".to_string()
    } else {
        format!("q{q}")
    }
}

/// A training set and the validation points to score against it.
struct FoldData {
    train: Vec<(FeatureVector, bool)>,
    validation: Vec<(FeatureVector, bool)>,
}

fn assemble_fold(
    histories: &[InteractionHistory],
    plan: &FoldPlan,
    fold: &Fold,
) -> FoldData {
    let test_pairs: HashSet<usize> = plan.test.iter().map(|&(p, _)| p).collect();
    let trunc: BTreeMap<usize, usize> = fold.truncated.iter().copied().collect();
    let mut train = Vec::new();
    let mut validation = Vec::new();
    for (p, h) in histories.iter().enumerate() {
        if test_pairs.contains(&p) {
            continue;
        }
        let cut = trunc.get(&p).copied().unwrap_or(h.interactions.len());
        for idx in 0..cut {
            train.push((extract_features(h, idx), h.interactions[idx].outcome));
        }
        if let Some(&t) = trunc.get(&p) {
            validation.push((extract_features(h, t), h.interactions[t].outcome));
        }
    }
    FoldData { train, validation }
}

fn assemble_test(histories: &[InteractionHistory], plan: &FoldPlan) -> FoldData {
    let test_pairs: HashSet<usize> = plan.test.iter().map(|&(p, _)| p).collect();
    let mut train = Vec::new();
    for (p, h) in histories.iter().enumerate() {
        if test_pairs.contains(&p) {
            continue;
        }
        for idx in 0..h.interactions.len() {
            train.push((extract_features(h, idx), h.interactions[idx].outcome));
        }
    }
    let validation = plan
        .test
        .iter()
        .map(|&(p, t)| {
            let h = &histories[p];
            (extract_features(h, t), h.interactions[t].outcome)
        })
        .collect();
    FoldData { train, validation }
}

/// Fit one spec on a fold, choosing the penalty on validation
/// log-likelihood where the family takes one. Returns per-row scores
/// (`None` where the model cannot score the row) and the chosen penalty.
fn fit_and_score(
    spec: ModelSpec,
    data: &FoldData,
) -> Result<(Vec<Option<f64>>, f64), EvalError> {
    let score_with = |l2: f64| -> Result<Vec<Option<f64>>, EvalError> {
        let model = spec.fit(&data.train, l2)?;
        Ok(data
            .validation
            .iter()
            .map(|(f, _)| model.predict_recall(f).ok())
            .collect())
    };
    if !spec.needs_l2() {
        return Ok((score_with(0.0)?, 0.0));
    }
    let mut best: Option<(f64, f64, Vec<Option<f64>>)> = None; // (ll, l2, scores)
    for &l2 in &L2_GRID {
        let scores = score_with(l2)?;
        let ll: f64 = scores
            .iter()
            .zip(&data.validation)
            .filter_map(|(s, (_, y))| {
                s.map(|p| {
                    let p = p.clamp(1e-12, 1.0 - 1e-12);
                    if *y { p.ln() } else { (1.0 - p).ln() }
                })
            })
            .sum();
        if best.as_ref().map_or(true, |(b, _, _)| ll > *b) {
            best = Some((ll, l2, scores));
        }
    }
    let (_, l2, scores) = best.expect("non-empty grid");
    Ok((scores, l2))
}

fn push_cells(
    cells: &mut Vec<EvalCell>,
    model: &str,
    fold: Option<usize>,
    scores: &[Option<f64>],
    validation: &[(FeatureVector, bool)],
) -> Option<f64> {
    // group scored points into "all" plus deck bins
    let mut groups: BTreeMap<String, (Vec<f64>, Vec<bool>)> = BTreeMap::new();
    for (s, (f, y)) in scores.iter().zip(validation) {
        if let Some(s) = s {
            for key in ["all".to_string(), deck_bin(f.q)] {
                let g = groups.entry(key).or_default();
                g.0.push(*s);
                g.1.push(*y);
            }
        }
    }
    let mut overall = None;
    for (bin, (s, y)) in groups {
        let positives = y.iter().filter(|&&b| b).count();
        let negatives = y.len() - positives;
        let a = auc(&s, &y).ok();
        if bin == "all" {
            overall = a;
        }
        cells.push(EvalCell {
            model: model.to_string(),
            fold,
            bin,
            auc: a,
            positives,
            negatives,
        });
    }
    overall
}

/// Run the full protocol: per fold, fit every model on the fold's training
/// data and score its validation points overall and per deck bin; then fit
/// on all non-test data and score the held-out test points.
pub fn evaluate_models(
    histories: &[InteractionHistory],
    specs: &[ModelSpec],
    plan: &FoldPlan,
) -> Result<EvalReport, EvalError> {
    if plan.pair_count != histories.len() {
        return Err(EvalError::PlanMismatch { plan: plan.pair_count, given: histories.len() });
    }
    let fold_data: Vec<FoldData> = plan
        .folds
        .iter()
        .map(|f| assemble_fold(histories, plan, f))
        .collect();
    let test_data = assemble_test(histories, plan);

    let mut cells = Vec::new();
    let mut models = Vec::new();
    for &spec in specs {
        let name = spec.name();
        let mut fold_auc = Vec::with_capacity(fold_data.len());
        let mut l2_by_fold = Vec::with_capacity(fold_data.len());
        for (fi, data) in fold_data.iter().enumerate() {
            let (scores, l2) = fit_and_score(spec, data)?;
            l2_by_fold.push(l2);
            fold_auc.push(push_cells(&mut cells, &name, Some(fi), &scores, &data.validation));
        }
        let (test_scores, l2_test) = fit_and_score(spec, &test_data)?;
        let test_auc = push_cells(&mut cells, &name, None, &test_scores, &test_data.validation);

        let scored: Vec<f64> = fold_auc.iter().flatten().copied().collect();
        let (mean, stderr) = if scored.is_empty() {
            (None, None)
        } else {
            let m = scored.iter().sum::<f64>() / scored.len() as f64;
            let se = if scored.len() > 1 {
                let var = scored.iter().map(|a| (a - m) * (a - m)).sum::<f64>()
                    / (scored.len() - 1) as f64;
                Some((var / scored.len() as f64).sqrt())
            } else {
                Some(0.0)
            };
            (Some(m), se)
        };
        models.push(ModelSummary {
            model: name,
            fold_auc,
            mean_validation_auc: mean,
            stderr,
            test_auc,
            l2_by_fold,
            l2_test,
        });
    }
    Ok(EvalReport { fold_count: plan.fold_count, models, cells })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::log_store::Interaction;
    use approx::assert_abs_diff_eq;
    use rand::Rng;

    fn history(user: &str, item: &str, data: &[(f64, bool)]) -> InteractionHistory {
        let mut q = 1u32;
        let interactions = data
            .iter()
            .enumerate()
            .map(|(i, &(t, o))| {
                let x = Interaction {
                    timestamp: t,
                    outcome: o,
                    delay: if i == 0 { None } else { Some(t - data[i - 1].0) },
                    n: (i + 1) as u32,
                    q,
                };
                q = if o { q + 1 } else { q.max(2) - 1 };
                x
            })
            .collect();
        InteractionHistory {
            user_id: user.into(),
            item_id: item.into(),
            interactions,
        }
    }

    fn synthetic_histories(pairs: usize, len: usize, seed: u64) -> Vec<InteractionHistory> {
        use rand::SeedableRng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..pairs)
            .map(|p| {
                let mut t = 0.0;
                let data: Vec<(f64, bool)> = (0..len)
                    .map(|_| {
                        t += rng.gen_range(1.0..50.0);
                        (t, rng.gen_bool(0.7))
                    })
                    .collect();
                history(&format!("u{}", p % 7), &format!("i{p}"), &data)
            })
            .collect()
    }

    #[test]
    fn plan_has_spec_counts_and_is_deterministic() {
        let hs = synthetic_histories(100, 5, 3);
        let plan = make_fold_plan(&hs, 10, 0.2, 0.1, 42).unwrap();
        assert_eq!(plan.test.len(), 20);
        assert_eq!(plan.folds.len(), 10);
        for f in &plan.folds {
            assert_eq!(f.truncated.len(), 8); // 10% of the 80 non-test pairs
        }
        let again = make_fold_plan(&hs, 10, 0.2, 0.1, 42).unwrap();
        assert_eq!(plan, again);
        let other = make_fold_plan(&hs, 10, 0.2, 0.1, 43).unwrap();
        assert_ne!(plan, other);
    }

    #[test]
    fn folds_cover_every_non_test_pair_exactly_once() {
        let hs = synthetic_histories(100, 4, 9);
        let plan = make_fold_plan(&hs, 10, 0.2, 0.1, 7).unwrap();
        let test: HashSet<usize> = plan.test.iter().map(|&(p, _)| p).collect();
        let mut seen: BTreeMap<usize, usize> = BTreeMap::new();
        for f in &plan.folds {
            for &(p, t) in &f.truncated {
                assert!(!test.contains(&p), "test pair truncated in a fold");
                assert!(t >= 1 && t < hs[p].interactions.len());
                *seen.entry(p).or_default() += 1;
            }
        }
        assert_eq!(seen.len(), 80);
        assert!(seen.values().all(|&c| c == 1));
    }

    #[test]
    fn plan_rejects_degenerate_inputs() {
        let hs = synthetic_histories(5, 4, 1);
        assert!(matches!(
            make_fold_plan(&hs, 10, 0.2, 0.1, 0),
            Err(EvalError::TooFewPairs { .. })
        ));
        let mut short = synthetic_histories(20, 4, 1);
        short[3].interactions.truncate(1);
        assert!(matches!(
            make_fold_plan(&short, 10, 0.2, 0.1, 0),
            Err(EvalError::ShortHistory(..))
        ));
    }

    #[test]
    fn auc_matches_brute_force_pair_counting() {
        use rand::SeedableRng;
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..50 {
            let n = rng.gen_range(5..60);
            let scores: Vec<f64> = (0..n).map(|_| (rng.gen_range(0..10) as f64) / 10.0).collect();
            let labels: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.5)).collect();
            let pos = labels.iter().filter(|&&y| y).count();
            if pos == 0 || pos == n {
                continue;
            }
            let mut num = 0.0;
            let mut den = 0.0;
            for i in 0..n {
                for j in 0..n {
                    if labels[i] && !labels[j] {
                        den += 1.0;
                        if scores[i] > scores[j] {
                            num += 1.0;
                        } else if scores[i] == scores[j] {
                            num += 0.5;
                        }
                    }
                }
            }
            let fast = auc(&scores, &labels).unwrap();
            assert_abs_diff_eq!(fast, num / den, epsilon = 1e-12);
        }
    }

    #[test]
    fn auc_unit_cases() {
        let a = auc(&[0.9, 0.8, 0.7, 0.6], &[true, false, true, false]).unwrap();
        assert_eq!(a, 0.75);
        let labels = [true, false, true, false, false, true];
        let as_scores: Vec<f64> = labels.iter().map(|&y| if y { 1.0 } else { 0.0 }).collect();
        assert_eq!(auc(&as_scores, &labels).unwrap(), 1.0);
        assert_eq!(auc(&[0.4; 6], &labels).unwrap(), 0.5);
        assert!(matches!(auc(&[0.1, 0.2], &[true, true]), Err(EvalError::SingleClass)));
    }

    #[test]
    fn auc_invariant_under_monotone_transform() {
        use rand::SeedableRng;
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let scores: Vec<f64> = (0..40).map(|_| rng.gen_range(0.0..1.0)).collect();
        let labels: Vec<bool> = (0..40).map(|_| rng.gen_bool(0.4)).collect();
        let a = auc(&scores, &labels).unwrap();
        let squashed: Vec<f64> = scores.iter().map(|s| (5.0 * s).exp() / 7.0).collect();
        assert_abs_diff_eq!(a, auc(&squashed, &labels).unwrap(), epsilon = 1e-12);
    }

    #[test]
    fn training_never_contains_validation_or_test_points() {
        let hs = synthetic_histories(40, 6, 5);
        let plan = make_fold_plan(&hs, 5, 0.2, 0.2, 11).unwrap();
        let test: HashSet<usize> = plan.test.iter().map(|&(p, _)| p).collect();
        for fold in &plan.folds {
            let data = assemble_fold(&hs, &plan, fold);
            // train rows never come from test pairs
            let test_keys: HashSet<(String, String)> = test
                .iter()
                .map(|&p| (hs[p].user_id.clone(), hs[p].item_id.clone()))
                .collect();
            for (f, _) in &data.train {
                assert!(!test_keys.contains(&(f.user_id.clone(), f.item_id.clone())));
            }
            // a truncated pair contributes exactly t training rows (n <= t)
            for &(p, t) in &fold.truncated {
                let key = (hs[p].user_id.clone(), hs[p].item_id.clone());
                let max_n = data
                    .train
                    .iter()
                    .filter(|(f, _)| (f.user_id.clone(), f.item_id.clone()) == key)
                    .map(|(f, _)| f.n)
                    .max()
                    .unwrap();
                assert_eq!(max_n as usize, t, "training rows leak past the truncation");
            }
        }
    }

    #[test]
    fn oracle_model_wins_and_constant_model_is_chance() {
        // generate from the deck-moderated forgetting curve and compare the
        // matched model against a constant predictor
        use rand::SeedableRng;
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let theta = 0.05;
        let hs: Vec<InteractionHistory> = (0..150)
            .map(|p| {
                let mut t = 0.0;
                let mut q = 1u32;
                let mut data = Vec::new();
                for i in 0..8 {
                    t += rng.gen_range(5.0..80.0);
                    let d = if i == 0 { 0.0 } else { rng.gen_range(5.0..80.0) };
                    let p_recall = if i == 0 { 0.8 } else { (-theta * d / q as f64).exp() };
                    let o = rng.gen_bool(p_recall);
                    data.push((t, o));
                    q = if o { q + 1 } else { q.max(2) - 1 };
                }
                history("u", &format!("i{p}"), &data)
            })
            .collect();
        let plan = make_fold_plan(&hs, 10, 0.2, 0.1, 2).unwrap();
        let specs = [ModelSpec::from_row(8).unwrap(), ModelSpec::from_row(6).unwrap()];
        let report = evaluate_models(&hs, &specs, &plan).unwrap();
        let auc8 = report.models[0].mean_validation_auc.unwrap();
        // model 6 (constant strength, global difficulty) still varies with
        // delay; true chance-level comes from its per-bin behavior, so just
        // require the generating model to rank on top
        let auc6 = report.models[1].mean_validation_auc.unwrap();
        assert!(auc8 > auc6, "matched model {auc8} should beat mismatched {auc6}");
        assert!(report.cells.iter().all(|c| c.auc.map_or(true, |a| (0.0..=1.0).contains(&a))));
    }

    #[test]
    fn report_is_deterministic_and_serializes() {
        let hs = synthetic_histories(60, 5, 77);
        let plan = make_fold_plan(&hs, 5, 0.2, 0.2, 3).unwrap();
        let specs = [ModelSpec::from_row(9).unwrap(), ModelSpec::from_row(1).unwrap()];
        let a = serde_json::to_string(&evaluate_models(&hs, &specs, &plan).unwrap()).unwrap();
        let b = serde_json::to_string(&evaluate_models(&hs, &specs, &plan).unwrap()).unwrap();
        assert_eq!(a, b);
        let report = evaluate_models(&hs, &specs, &plan).unwrap();
        let csv = report.to_csv();
        assert!(csv.starts_with("model,fold,bin,auc,positives,negatives\n"));
        assert!(csv.contains("model-9,test,"));
        // deck bins partition the scored points: per (model, fold) the bin
        // totals sum to the "all" totals
        for m in &report.models {
            for fold in (0..plan.fold_count).map(Some).chain([None]) {
                let total: usize = report
                    .cells
                    .iter()
                    .filter(|c| c.model == m.model && c.fold == fold && c.bin != "all")
                    .map(|c| c.positives + c.negatives)
                    .sum();
                let all: usize = report
                    .cells
                    .iter()
                    .filter(|c| c.model == m.model && c.fold == fold && c.bin == "all")
                    .map(|c| c.positives + c.negatives)
                    .sum();
                assert_eq!(total, all);
            }
        }
    }

    #[test]
    fn stderr_is_sample_std_over_sqrt_folds() {
        let hs = synthetic_histories(60, 5, 12);
        let plan = make_fold_plan(&hs, 5, 0.2, 0.2, 8).unwrap();
        let specs = [ModelSpec::from_row(5).unwrap()];
        let report = evaluate_models(&hs, &specs, &plan).unwrap();
        let m = &report.models[0];
        let scored: Vec<f64> = m.fold_auc.iter().flatten().copied().collect();
        let mean = scored.iter().sum::<f64>() / scored.len() as f64;
        let sd = (scored.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>()
            / (scored.len() - 1) as f64)
            .sqrt();
        assert_abs_diff_eq!(m.stderr.unwrap(), sd / (scored.len() as f64).sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(m.mean_validation_auc.unwrap(), mean, epsilon = 1e-12);
    }

    #[test]
    fn l2_is_selected_from_the_grid() {
        let hs = synthetic_histories(60, 6, 21);
        let plan = make_fold_plan(&hs, 5, 0.2, 0.2, 9).unwrap();
        let specs = [ModelSpec::Irt1];
        let report = evaluate_models(&hs, &specs, &plan).unwrap();
        for l2 in report.models[0].l2_by_fold.iter().chain([&report.models[0].l2_test]) {
            assert!(L2_GRID.contains(l2), "chosen l2 {l2} not on the grid");
        }
    }

    #[test]
    fn plan_mismatch_is_rejected() {
        let hs = synthetic_histories(30, 5, 2);
        let plan = make_fold_plan(&hs, 5, 0.2, 0.2, 1).unwrap();
        let fewer = &hs[..20];
        assert!(matches!(
            evaluate_models(fewer, &[ModelSpec::Irt0User], &plan),
            Err(EvalError::PlanMismatch { .. })
        ));
    }
}
