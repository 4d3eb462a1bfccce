//! Leitner queue network laboratory.
//!
//! Building blocks for studying spaced-repetition review scheduling:
//!
//! - [`log_store`]: parse flashcard review logs and reconstruct per
//!   user-item interaction histories (delay, review count, deck position).
//! - [`memory_models`]: recall-probability models (exponential forgetting
//!   curves, 0PL/1PL IRT, logistic regression) and their fitting routines.
//! - [`model_eval`]: truncated-history cross-validation and AUC reporting.
//! - [`lqn_sim`]: discrete-event simulator of the Leitner queue network
//!   with clocked or sampled review delays.
//! - [`planner`]: steady-state flow-balance solver, feasibility thresholds,
//!   and throughput-optimal static schedules.

pub mod log_store;
pub mod lqn_sim;
pub mod memory_models;
pub mod model_eval;
pub mod optim;
pub mod planner;
pub mod seeds;
