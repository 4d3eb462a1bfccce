//! Discrete-event simulator of the deck-promotion review system.
//!
//! Events arrive at Poisson rate `U` (the review budget). Each event slot is
//! an introduction (rate `lambda_ext`), a review of deck k's head-of-line
//! item (rate `mu_k`), or idle (any budget slack). A reviewed item recalls
//! with probability `exp(-theta * D / k)` and moves up, down, or out.

use std::collections::{BTreeMap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::memory_models::{fit_efc_global, FeatureVector};
use crate::planner;
use crate::seeds;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid simulator config: {0}")]
    InvalidConfig(String),
    #[error("mean-recall delay mode needs mu_k > lambda_k at every deck (deck {deck}: mu={mu}, lambda={lambda})")]
    StarvedMeanRecall { deck: usize, mu: f64, lambda: f64 },
    #[error("flow solve for mean-recall delays did not converge to a feasible point")]
    InfeasibleFlows,
    #[error("session has non-positive duration")]
    ZeroDurationSession,
    #[error(transparent)]
    Fit(#[from] crate::memory_models::FitError),
}

/// Number of decks: a finite chain with mastery on exit from deck `n`, or an
/// unbounded chain where mastery is judged post hoc by final deck position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "DeckCountRepr", into = "DeckCountRepr")]
pub enum DeckCount {
    Finite(usize),
    Unbounded,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum DeckCountRepr {
    Count(usize),
    Word(String),
}

impl TryFrom<DeckCountRepr> for DeckCount {
    type Error = String;
    fn try_from(r: DeckCountRepr) -> Result<Self, String> {
        match r {
            DeckCountRepr::Count(n) if n >= 1 => Ok(DeckCount::Finite(n)),
            DeckCountRepr::Count(n) => Err(format!("deck count must be >= 1, got {n}")),
            DeckCountRepr::Word(w) if w == "unbounded" => Ok(DeckCount::Unbounded),
            DeckCountRepr::Word(w) => Err(format!("expected a deck count or \"unbounded\", got {w:?}")),
        }
    }
}

impl From<DeckCount> for DeckCountRepr {
    fn from(d: DeckCount) -> Self {
        match d {
            DeckCount::Finite(n) => DeckCountRepr::Count(n),
            DeckCount::Unbounded => DeckCountRepr::Word("unbounded".into()),
        }
    }
}

/// Service rates: given explicitly per deck, or the `mu_k = c / sqrt(k)`
/// profile normalized so the schedule spends the whole budget
/// (`lambda_ext + sum mu_k = U`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MuRule {
    Explicit(Vec<f64>),
    InverseSqrtTight { decks: usize },
}

impl MuRule {
    /// Concrete per-deck rates for a given arrival rate and budget.
    pub fn rates(&self, lambda_ext: f64, budget: f64) -> Result<Vec<f64>, SimError> {
        match self {
            MuRule::Explicit(mu) => Ok(mu.clone()),
            MuRule::InverseSqrtTight { decks } => {
                if *decks == 0 {
                    return Err(SimError::InvalidConfig("inverse_sqrt_tight needs decks >= 1".into()));
                }
                let slack = budget - lambda_ext;
                if slack < 0.0 {
                    return Err(SimError::InvalidConfig(format!(
                        "arrival rate {lambda_ext} exceeds budget {budget}"
                    )));
                }
                let norm: f64 = (1..=*decks).map(|k| 1.0 / (k as f64).sqrt()).sum();
                Ok((1..=*decks).map(|k| slack / (k as f64).sqrt() / norm).collect())
            }
        }
    }
}

/// Item difficulty: one global value, or per-item with a default for items
/// not in the map. Simulated items are labelled `item-<index>`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThetaRule {
    Global(f64),
    PerItem {
        default: f64,
        items: BTreeMap<String, f64>,
    },
}

impl ThetaRule {
    pub fn default_value(&self) -> f64 {
        match self {
            ThetaRule::Global(t) => *t,
            ThetaRule::PerItem { default, .. } => *default,
        }
    }

    fn for_item(&self, idx: u64) -> f64 {
        match self {
            ThetaRule::Global(t) => *t,
            ThetaRule::PerItem { default, items } => {
                items.get(&item_label(idx)).copied().unwrap_or(*default)
            }
        }
    }
}

/// How review delays are obtained: the actual elapsed clock time since the
/// item's last review, or an independent `Exponential(mu_k - lambda_k)`
/// draw (the Jackson-network relaxation). With `lambda: None` the per-deck
/// arrival rates are computed from the flow-balance fixed point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DelaySampling {
    Clocked,
    MeanRecall {
        #[serde(default)]
        lambda: Option<Vec<f64>>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Horizon {
    MaxReviews(u64),
    Duration(f64),
}

fn default_mastery_deck() -> usize {
    6
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n_decks: DeckCount,
    pub lambda_ext: f64,
    pub mu: MuRule,
    pub theta: ThetaRule,
    /// Review budget `U`: total Poisson event rate.
    pub budget: f64,
    pub horizon: Horizon,
    #[serde(default)]
    pub max_unique_items: Option<u64>,
    pub delay_mode: DelaySampling,
    /// In unbounded mode, items whose final deck is at least this are
    /// counted as mastered.
    #[serde(default = "default_mastery_deck")]
    pub mastery_deck: usize,
    /// Redraw among currently feasible actions instead of idling when the
    /// sampled action cannot be performed (empty deck, exhausted items).
    #[serde(default)]
    pub resample_on_empty: bool,
    #[serde(default = "default_true")]
    pub record_trace: bool,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    Introduce,
    Review,
    Idle,
}

/// One simulated event. `deck` is the deck the action touched (the item's
/// position before the outcome); `q_after` is where the item ended up, with
/// `None` meaning it exited the system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub time: f64,
    pub action: Action,
    pub item: Option<u64>,
    pub deck: Option<usize>,
    pub outcome: Option<bool>,
    pub q_after: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub mastered_count: u64,
    pub introduced_count: u64,
    /// Final per-deck occupancy. Finite mode: decks `1..=n`. Unbounded mode:
    /// decks `1..mastery_deck` (anything at or past the mastery deck is in
    /// `mastered_count`).
    pub occupancy: Vec<u64>,
    pub event_count: u64,
    pub elapsed: f64,
    /// Long-run learning rate `mastered / elapsed`.
    pub lambda_out: f64,
    pub trace: Vec<TraceEvent>,
}

pub fn item_label(idx: u64) -> String {
    format!("item-{idx}")
}

/// Resolve the mean-recall per-deck arrival rates, either taking the
/// configured vector or solving the flow-balance fixed point.
fn mean_recall_lambda(
    mu: &[f64],
    lambda_ext: f64,
    theta: f64,
    configured: &Option<Vec<f64>>,
) -> Result<Vec<f64>, SimError> {
    let lambda = match configured {
        Some(l) => {
            if l.len() != mu.len() {
                return Err(SimError::InvalidConfig(format!(
                    "mean_recall lambda has {} entries but there are {} service decks",
                    l.len(),
                    mu.len()
                )));
            }
            l.clone()
        }
        None => {
            let sol = planner::solve_flow_balance(mu, lambda_ext, theta);
            if !sol.feasible {
                return Err(SimError::InfeasibleFlows);
            }
            sol.lambda
        }
    };
    for (k, (&m, &l)) in mu.iter().zip(&lambda).enumerate() {
        if m <= l {
            return Err(SimError::StarvedMeanRecall { deck: k + 1, mu: m, lambda: l });
        }
    }
    Ok(lambda)
}

struct DeckItem {
    id: u64,
    last_review: f64,
}

/// Run one seeded simulation. Deterministic given the config (the config's
/// own `seed` field is the stream).
pub fn simulate(config: &SimConfig) -> Result<SimResult, SimError> {
    let mu = config.mu.rates(config.lambda_ext, config.budget)?;
    if config.lambda_ext < 0.0 || mu.iter().any(|&m| m < 0.0) {
        return Err(SimError::InvalidConfig("rates must be non-negative".into()));
    }
    if config.budget <= 0.0 {
        return Err(SimError::InvalidConfig("budget must be positive".into()));
    }
    let total_rate = config.lambda_ext + mu.iter().sum::<f64>();
    if total_rate > config.budget * (1.0 + 1e-12) {
        return Err(SimError::InvalidConfig(format!(
            "lambda_ext + sum(mu) = {total_rate} exceeds budget {}",
            config.budget
        )));
    }
    if let DeckCount::Finite(n) = config.n_decks {
        if mu.len() != n {
            return Err(SimError::InvalidConfig(format!(
                "{} service rates for {} decks",
                mu.len(),
                n
            )));
        }
    }
    if config.mastery_deck < 1 {
        return Err(SimError::InvalidConfig("mastery_deck must be >= 1".into()));
    }
    let mean_lambda = match &config.delay_mode {
        DelaySampling::Clocked => None,
        DelaySampling::MeanRecall { lambda } => Some(mean_recall_lambda(
            &mu,
            config.lambda_ext,
            config.theta.default_value(),
            lambda,
        )?),
    };

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let interarrival = Exp::new(config.budget).expect("positive budget");
    let n_finite = match config.n_decks {
        DeckCount::Finite(n) => Some(n),
        DeckCount::Unbounded => None,
    };

    let mut decks: Vec<VecDeque<DeckItem>> = (0..mu.len().max(1)).map(|_| VecDeque::new()).collect();
    let mut trace = Vec::new();
    let mut now = 0.0f64;
    let mut introduced = 0u64;
    let mut mastered_exits = 0u64;
    let mut events = 0u64;

    loop {
        match config.horizon {
            Horizon::MaxReviews(max) => {
                if events >= max {
                    break;
                }
            }
            Horizon::Duration(_) => {}
        }
        let dt = interarrival.sample(&mut rng);
        let next = now + dt;
        if let Horizon::Duration(t_end) = config.horizon {
            if next > t_end {
                now = t_end;
                break;
            }
        }
        now = next;
        events += 1;

        // sample the event category from one uniform over the budget
        let can_intro = config.max_unique_items.map_or(true, |m| introduced < m);
        let chosen: Option<isize> = if config.resample_on_empty {
            // draw directly among currently feasible actions
            let mut weights: Vec<(isize, f64)> = Vec::with_capacity(mu.len() + 1);
            if can_intro && config.lambda_ext > 0.0 {
                weights.push((-1, config.lambda_ext));
            }
            for (k, &m) in mu.iter().enumerate() {
                if m > 0.0 && !decks[k].is_empty() {
                    weights.push((k as isize, m));
                }
            }
            let total: f64 = weights.iter().map(|(_, w)| w).sum();
            if total <= 0.0 {
                None
            } else {
                let mut u = rng.gen::<f64>() * total;
                let mut pick = None;
                for (a, w) in &weights {
                    u -= w;
                    if u <= 0.0 {
                        pick = Some(*a);
                        break;
                    }
                }
                pick.or(weights.last().map(|(a, _)| *a))
            }
        } else {
            let mut u = rng.gen::<f64>() * config.budget;
            if u < config.lambda_ext {
                Some(-1)
            } else {
                u -= config.lambda_ext;
                let mut pick = None;
                for (k, &m) in mu.iter().enumerate() {
                    if u < m {
                        pick = Some(k as isize);
                        break;
                    }
                    u -= m;
                }
                pick // None = idle slack
            }
        };

        let event = match chosen {
            Some(-1) => {
                if can_intro {
                    let id = introduced;
                    introduced += 1;
                    decks[0].push_back(DeckItem { id, last_review: now });
                    TraceEvent {
                        time: now,
                        action: Action::Introduce,
                        item: Some(id),
                        deck: None,
                        outcome: None,
                        q_after: Some(1),
                    }
                } else {
                    idle(now)
                }
            }
            Some(k) => {
                let k = k as usize;
                match decks[k].pop_front() {
                    None => idle(now),
                    Some(item) => {
                        let delay = match &mean_lambda {
                            None => now - item.last_review,
                            Some(lam) => {
                                let rate = mu[k] - lam[k];
                                Exp::new(rate).expect("validated margin").sample(&mut rng)
                            }
                        };
                        let theta = config.theta.for_item(item.id);
                        let p = (-theta * delay / (k + 1) as f64).exp();
                        let success = rng.gen::<f64>() < p;
                        let dest = if success {
                            match n_finite {
                                Some(n) if k + 1 == n => None, // exits mastered
                                _ => Some(k + 1),
                            }
                        } else {
                            Some(k.saturating_sub(1))
                        };
                        match dest {
                            None => mastered_exits += 1,
                            Some(d) => {
                                while decks.len() <= d {
                                    decks.push(VecDeque::new());
                                }
                                decks[d].push_back(DeckItem { id: item.id, last_review: now });
                            }
                        }
                        TraceEvent {
                            time: now,
                            action: Action::Review,
                            item: Some(item.id),
                            deck: Some(k + 1),
                            outcome: Some(success),
                            q_after: dest.map(|d| d + 1),
                        }
                    }
                }
            }
            None => idle(now),
        };
        if config.record_trace {
            trace.push(event);
        }
    }

    // post-hoc mastery in unbounded mode: final deck >= mastery_deck
    let (mastered, occupancy) = match n_finite {
        Some(_) => (
            mastered_exits,
            decks.iter().map(|d| d.len() as u64).collect::<Vec<_>>(),
        ),
        None => {
            let cut = config.mastery_deck - 1;
            let past: u64 = decks.iter().skip(cut).map(|d| d.len() as u64).sum();
            let mut occ: Vec<u64> = decks.iter().take(cut).map(|d| d.len() as u64).collect();
            occ.resize(cut, 0);
            (past, occ)
        }
    };
    let lambda_out = if now > 0.0 { mastered as f64 / now } else { 0.0 };
    Ok(SimResult {
        mastered_count: mastered,
        introduced_count: introduced,
        occupancy,
        event_count: events,
        elapsed: now,
        lambda_out,
        trace,
    })
}

fn idle(now: f64) -> TraceEvent {
    TraceEvent {
        time: now,
        action: Action::Idle,
        item: None,
        deck: None,
        outcome: None,
        q_after: None,
    }
}

/// One aggregated point of an arrival-rate sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub lambda_ext: f64,
    pub mean_lambda_out: f64,
    pub stderr: f64,
    pub mean_occupancy: Vec<f64>,
    pub mean_mastered: f64,
    pub mean_introduced: f64,
    pub trials: usize,
    /// Set when the rate violated the budget (or otherwise failed) and the
    /// point carries no data.
    pub skipped: Option<String>,
}

/// Sweep the external arrival rate: `trials` independent seeded runs per
/// rate, aggregated to mean / standard error of `lambda_out` plus mean final
/// occupancies. Rates that violate the budget are recorded as skipped.
pub fn sweep_arrival_rates(
    base: &SimConfig,
    rates: &[f64],
    trials: usize,
    seed: u64,
) -> Vec<SweepPoint> {
    rates
        .iter()
        .map(|&rate| {
            let mut config = base.clone();
            config.lambda_ext = rate;
            config.record_trace = false;
            let mut outs = Vec::with_capacity(trials);
            let mut occ_sum: Vec<f64> = Vec::new();
            let mut mastered_sum = 0.0;
            let mut introduced_sum = 0.0;
            for t in 0..trials {
                // key trial streams on the rate value itself so duplicated
                // rate entries reproduce identical aggregates
                config.seed = seeds::derive(seed, rate.to_bits(), t as u64);
                match simulate(&config) {
                    Ok(r) => {
                        outs.push(r.lambda_out);
                        if occ_sum.len() < r.occupancy.len() {
                            occ_sum.resize(r.occupancy.len(), 0.0);
                        }
                        for (s, &o) in occ_sum.iter_mut().zip(&r.occupancy) {
                            *s += o as f64;
                        }
                        mastered_sum += r.mastered_count as f64;
                        introduced_sum += r.introduced_count as f64;
                    }
                    Err(e) => {
                        return SweepPoint {
                            lambda_ext: rate,
                            mean_lambda_out: f64::NAN,
                            stderr: f64::NAN,
                            mean_occupancy: Vec::new(),
                            mean_mastered: f64::NAN,
                            mean_introduced: f64::NAN,
                            trials: 0,
                            skipped: Some(e.to_string()),
                        };
                    }
                }
            }
            let n = outs.len() as f64;
            let mean = outs.iter().sum::<f64>() / n;
            let var = if outs.len() > 1 {
                outs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)
            } else {
                0.0
            };
            SweepPoint {
                lambda_ext: rate,
                mean_lambda_out: mean,
                stderr: (var / n).sqrt(),
                mean_occupancy: occ_sum.iter().map(|s| s / n).collect(),
                mean_mastered: mastered_sum / n,
                mean_introduced: introduced_sum / n,
                trials: outs.len(),
                skipped: None,
            }
        })
        .collect()
}

/// Largest stable arrival rate when the service profile itself depends on
/// the arrival rate (e.g. the budget-tight `1/sqrt(k)` rule). Bisects on
/// feasibility of the flow-balance fixed point with the profile re-derived
/// at each probe rate.
pub fn threshold_for_rule(rule: &MuRule, budget: f64, theta: f64) -> Result<f64, SimError> {
    let feasible = |rate: f64| -> bool {
        match rule.rates(rate, budget) {
            Ok(mu) if mu.iter().all(|&m| m > 0.0) => {
                planner::solve_flow_balance(&mu, rate, theta).feasible
            }
            _ => false,
        }
    };
    if budget <= 0.0 || theta <= 0.0 {
        return Err(SimError::InvalidConfig("budget and theta must be positive".into()));
    }
    let (mut lo, mut hi) = (0.0, budget);
    if !feasible(0.0) {
        return Err(SimError::InfeasibleFlows);
    }
    while hi - lo > 1e-8 * budget {
        let mid = 0.5 * (lo + hi);
        if feasible(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// One recorded review session: its wall-clock duration and the scored
/// feature rows of its review log.
#[derive(Debug, Clone)]
pub struct Session {
    pub duration: f64,
    pub reviews: Vec<(FeatureVector, bool)>,
}

/// Estimate the review budget and global difficulty from session logs:
/// `U` is the mean per-session review rate (logs / duration), `theta` the
/// maximum-likelihood forgetting-curve difficulty on deck-moderated delays.
pub fn estimate_empirical_params(sessions: &[Session]) -> Result<(f64, f64), SimError> {
    if sessions.is_empty() {
        return Err(SimError::InvalidConfig("no sessions".into()));
    }
    let mut rate_sum = 0.0;
    let mut rows: Vec<(FeatureVector, bool)> = Vec::new();
    for s in sessions {
        if s.duration <= 0.0 {
            return Err(SimError::ZeroDurationSession);
        }
        rate_sum += s.reviews.len() as f64 / s.duration;
        rows.extend(s.reviews.iter().cloned());
    }
    let u = rate_sum / sessions.len() as f64;
    let theta = fit_efc_global(
        &rows,
        crate::memory_models::StrengthMode::LeitnerQ,
        crate::memory_models::DelayMode::WithDelay,
    )?;
    Ok((u, theta))
}
