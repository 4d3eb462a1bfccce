//! Zero- and one-parameter logistic IRT models, fit by penalized
//! maximum likelihood (gradient ascent with backtracking line search).

use super::features::FeatureVector;
use super::{FitError, ModelError};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IrtVariant {
    /// logistic(theta_j): per-user ability only.
    UserOnly,
    /// logistic(-beta_i): per-item difficulty only.
    ItemOnly,
    /// logistic(theta_j - beta_i), the Rasch model.
    Full,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IrtModel {
    pub variant: IrtVariant,
    pub user_ability: BTreeMap<String, f64>,
    pub item_difficulty: BTreeMap<String, f64>,
    /// Training-mean parameter values, used for unseen users/items.
    pub user_fallback: f64,
    pub item_fallback: f64,
    pub l2: f64,
}

pub fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl IrtModel {
    pub fn predict(&self, f: &FeatureVector) -> Result<f64, ModelError> {
        let theta = self
            .user_ability
            .get(&f.user_id)
            .copied()
            .unwrap_or(self.user_fallback);
        let beta = self
            .item_difficulty
            .get(&f.item_id)
            .copied()
            .unwrap_or(self.item_fallback);
        let z = match self.variant {
            IrtVariant::UserOnly => theta,
            IrtVariant::ItemOnly => -beta,
            IrtVariant::Full => theta - beta,
        };
        Ok(logistic(z))
    }
}

/// Indexed training data for the ascent: rows as (user index, item index, outcome).
struct Design {
    users: Vec<String>,
    items: Vec<String>,
    rows: Vec<(usize, usize, bool)>,
    variant: IrtVariant,
    l2: f64,
}

impl Design {
    fn n_params(&self) -> usize {
        match self.variant {
            IrtVariant::UserOnly => self.users.len(),
            IrtVariant::ItemOnly => self.items.len(),
            IrtVariant::Full => self.users.len() + self.items.len(),
        }
    }

    fn z(&self, params: &[f64], u: usize, i: usize) -> f64 {
        match self.variant {
            IrtVariant::UserOnly => params[u],
            IrtVariant::ItemOnly => -params[i],
            IrtVariant::Full => params[u] - params[self.users.len() + i],
        }
    }

    /// Penalized Bernoulli log-likelihood and its gradient.
    fn objective(&self, params: &[f64]) -> (f64, Vec<f64>) {
        let mut ll = 0.0;
        let mut grad = vec![0.0; params.len()];
        for &(u, i, y) in &self.rows {
            let z = self.z(params, u, i);
            // log sigma(z) = -softplus(-z); log(1 - sigma(z)) = -z - softplus(-z)
            let log_sigma = -softplus(-z);
            ll += if y { log_sigma } else { -z + log_sigma };
            let resid = (if y { 1.0 } else { 0.0 }) - logistic(z);
            match self.variant {
                IrtVariant::UserOnly => grad[u] += resid,
                IrtVariant::ItemOnly => grad[i] -= resid,
                IrtVariant::Full => {
                    grad[u] += resid;
                    grad[self.users.len() + i] -= resid;
                }
            }
        }
        for (g, p) in grad.iter_mut().zip(params) {
            *g -= self.l2 * p;
        }
        let penalty = 0.5 * self.l2 * params.iter().map(|p| p * p).sum::<f64>();
        (ll - penalty, grad)
    }
}

fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else {
        (1.0 + x.exp()).ln()
    }
}

/// Public hook for finite-difference gradient checks of the penalized
/// IRT objective.
pub fn irt_objective_and_gradient(
    rows: &[(FeatureVector, bool)],
    variant: IrtVariant,
    l2: f64,
    params: &[f64],
) -> (f64, Vec<f64>) {
    let design = build_design(rows, variant, l2);
    design.objective(params)
}

/// Number of free parameters for a given training set and variant.
pub fn irt_param_count(rows: &[(FeatureVector, bool)], variant: IrtVariant) -> usize {
    build_design(rows, variant, 0.0).n_params()
}

fn build_design(rows: &[(FeatureVector, bool)], variant: IrtVariant, l2: f64) -> Design {
    // index entities by sorted name so parameter order matches `users`/`items`
    let mut user_idx: BTreeMap<&str, usize> = rows.iter().map(|(f, _)| (f.user_id.as_str(), 0)).collect();
    let mut item_idx: BTreeMap<&str, usize> = rows.iter().map(|(f, _)| (f.item_id.as_str(), 0)).collect();
    for (pos, (_, idx)) in user_idx.iter_mut().enumerate() {
        *idx = pos;
    }
    for (pos, (_, idx)) in item_idx.iter_mut().enumerate() {
        *idx = pos;
    }
    let indexed = rows
        .iter()
        .map(|(f, y)| (user_idx[f.user_id.as_str()], item_idx[f.item_id.as_str()], *y))
        .collect();
    Design {
        users: user_idx.keys().map(|s| s.to_string()).collect(),
        items: item_idx.keys().map(|s| s.to_string()).collect(),
        rows: indexed,
        variant,
        l2,
    }
}

pub const GRAD_TOL: f64 = 1e-6;
pub const MAX_ITER: usize = 10_000;

/// Full-batch gradient ascent with backtracking line search; converges when
/// the gradient infinity-norm drops below `GRAD_TOL`.
pub(crate) fn ascend(objective: &dyn Fn(&[f64]) -> (f64, Vec<f64>), n_params: usize) -> (Vec<f64>, usize) {
    let mut x = vec![0.0; n_params];
    let (mut fx, mut grad) = objective(&x);
    let mut iterations = 0;
    let mut step = 1.0f64;
    for iter in 0..MAX_ITER {
        iterations = iter + 1;
        let gnorm = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
        if gnorm < GRAD_TOL {
            break;
        }
        let g2: f64 = grad.iter().map(|g| g * g).sum();
        // warm-start the line search from the last accepted step
        step = (step * 2.0).min(1e6);
        loop {
            let candidate: Vec<f64> = x.iter().zip(&grad).map(|(xi, gi)| xi + step * gi).collect();
            let (fc, gc) = objective(&candidate);
            if fc >= fx + 1e-4 * step * g2 {
                x = candidate;
                fx = fc;
                grad = gc;
                break;
            }
            step *= 0.5;
            if step < 1e-16 {
                return (x, iterations);
            }
        }
    }
    (x, iterations)
}

/// Fit an IRT variant by MAP estimation with an L2 penalty. The Rasch model
/// is translation-invariant, so it requires `l2 > 0` to be identifiable.
pub fn fit_irt(
    rows: &[(FeatureVector, bool)],
    variant: IrtVariant,
    l2: f64,
) -> Result<IrtModel, FitError> {
    if rows.is_empty() {
        return Err(FitError::EmptyTrainingSet);
    }
    if matches!(variant, IrtVariant::Full) && l2 <= 0.0 {
        return Err(FitError::Unidentifiable("1PL-IRT is unidentifiable without penalty".into()));
    }
    let design = build_design(rows, variant, l2);
    let (params, _) = ascend(&|p| design.objective(p), design.n_params());

    let mut user_ability = BTreeMap::new();
    let mut item_difficulty = BTreeMap::new();
    match variant {
        IrtVariant::UserOnly => {
            for (u, name) in design.users.iter().enumerate() {
                user_ability.insert(name.clone(), params[u]);
            }
        }
        IrtVariant::ItemOnly => {
            for (i, name) in design.items.iter().enumerate() {
                item_difficulty.insert(name.clone(), params[i]);
            }
        }
        IrtVariant::Full => {
            for (u, name) in design.users.iter().enumerate() {
                user_ability.insert(name.clone(), params[u]);
            }
            for (i, name) in design.items.iter().enumerate() {
                item_difficulty.insert(name.clone(), params[design.users.len() + i]);
            }
        }
    }
    let mean = |m: &BTreeMap<String, f64>| {
        if m.is_empty() {
            0.0
        } else {
            m.values().sum::<f64>() / m.len() as f64
        }
    };
    Ok(IrtModel {
        user_fallback: mean(&user_ability),
        item_fallback: mean(&item_difficulty),
        variant,
        user_ability,
        item_difficulty,
        l2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn row(user: &str, item: &str, y: bool) -> (FeatureVector, bool) {
        (
            FeatureVector {
                delay: Some(1.0),
                n: 1,
                q: 1,
                user_id: user.into(),
                item_id: item.into(),
                history_stats: None,
            },
            y,
        )
    }

    #[test]
    fn user_only_recovers_empirical_rate() {
        // 50% recall -> theta_j = 0; 75% recall -> theta_j = log 3
        let rows: Vec<_> = (0..100).map(|i| row("u", &format!("i{i}"), i % 2 == 0)).collect();
        let m = fit_irt(&rows, IrtVariant::UserOnly, 0.0).unwrap();
        assert_abs_diff_eq!(m.user_ability["u"], 0.0, epsilon = 1e-5);

        let rows: Vec<_> = (0..100).map(|i| row("u", &format!("i{i}"), i % 4 != 0)).collect();
        let m = fit_irt(&rows, IrtVariant::UserOnly, 0.0).unwrap();
        assert_abs_diff_eq!(m.user_ability["u"], 3.0f64.ln(), epsilon = 1e-5);
    }

    #[test]
    fn full_without_penalty_is_rejected() {
        let rows = vec![row("u", "i", true)];
        assert!(matches!(
            fit_irt(&rows, IrtVariant::Full, 0.0),
            Err(FitError::Unidentifiable(_))
        ));
    }

    #[test]
    fn item_only_sign_convention() {
        // an item that is mostly failed should have positive difficulty
        let rows: Vec<_> = (0..100).map(|i| row(&format!("u{i}"), "hard", i % 5 == 0)).collect();
        let m = fit_irt(&rows, IrtVariant::ItemOnly, 0.0).unwrap();
        assert!(m.item_difficulty["hard"] > 0.0);
        let p = m.predict(&row("anyone", "hard", true).0).unwrap();
        assert_abs_diff_eq!(p, 0.2, epsilon = 1e-4);
    }

    #[test]
    fn full_recovers_ability_difficulty_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n_users = 30;
        let n_items = 30;
        let abilities: Vec<f64> = (0..n_users).map(|_| rng.gen_range(-1.5..1.5)).collect();
        let difficulties: Vec<f64> = (0..n_items).map(|_| rng.gen_range(-1.5..1.5)).collect();
        let mut rows = Vec::new();
        for _ in 0..10_000 {
            let u = rng.gen_range(0..n_users);
            let i = rng.gen_range(0..n_items);
            let p = logistic(abilities[u] - difficulties[i]);
            rows.push(row(&format!("u{u:03}"), &format!("i{i:03}"), rng.gen_bool(p)));
        }
        let m = fit_irt(&rows, IrtVariant::Full, 1e-3).unwrap();
        // compare fitted z = theta_j - beta_i to the truth over all pairs
        let mut truth = Vec::new();
        let mut fitted = Vec::new();
        for u in 0..n_users {
            for i in 0..n_items {
                truth.push(abilities[u] - difficulties[i]);
                fitted.push(
                    m.user_ability[&format!("u{u:03}")] - m.item_difficulty[&format!("i{i:03}")],
                );
            }
        }
        let corr = pearson(&truth, &fitted);
        assert!(corr > 0.95, "correlation {corr}");
    }

    fn pearson(a: &[f64], b: &[f64]) -> f64 {
        let n = a.len() as f64;
        let ma = a.iter().sum::<f64>() / n;
        let mb = b.iter().sum::<f64>() / n;
        let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
        let va: f64 = a.iter().map(|x| (x - ma) * (x - ma)).sum();
        let vb: f64 = b.iter().map(|y| (y - mb) * (y - mb)).sum();
        cov / (va.sqrt() * vb.sqrt())
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rows: Vec<_> = (0..200)
            .map(|i| row(&format!("u{}", i % 5), &format!("i{}", i % 7), rng.gen_bool(0.6)))
            .collect();
        for variant in [IrtVariant::UserOnly, IrtVariant::ItemOnly, IrtVariant::Full] {
            let n = irt_param_count(&rows, variant);
            for _ in 0..20 {
                let params: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let (_, grad) = irt_objective_and_gradient(&rows, variant, 0.1, &params);
                let h = 1e-5;
                for k in 0..n {
                    let mut plus = params.clone();
                    plus[k] += h;
                    let mut minus = params.clone();
                    minus[k] -= h;
                    let (fp, _) = irt_objective_and_gradient(&rows, variant, 0.1, &plus);
                    let (fm, _) = irt_objective_and_gradient(&rows, variant, 0.1, &minus);
                    let fd = (fp - fm) / (2.0 * h);
                    let rel = (grad[k] - fd).abs() / grad[k].abs().max(fd.abs()).max(1e-8);
                    assert!(rel < 1e-5, "variant {variant:?} param {k}: {} vs {fd}", grad[k]);
                }
            }
        }
    }

    #[test]
    fn unseen_entities_fall_back_to_training_means() {
        let rows: Vec<_> = (0..40).map(|i| row(&format!("u{}", i % 2), "i", i % 3 != 0)).collect();
        let m = fit_irt(&rows, IrtVariant::UserOnly, 0.0).unwrap();
        let expected = logistic(m.user_fallback);
        let p = m.predict(&row("stranger", "i", true).0).unwrap();
        assert_abs_diff_eq!(p, expected, epsilon = 1e-12);
    }
}
