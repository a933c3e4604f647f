//! Stopping rules for one-phase technology-assisted review (TAR).
//!
//! A one-phase review walks a collection in a prioritized order; every
//! document receives an *A-rank*, its position in that order. Given a simple
//! random sample of positive documents, a stopping rule picks one of the
//! sample's order statistics and stops the review when that sampled document
//! is reached.
//!
//! * [`quantile`]: the Q7 quantile point estimator, the QPET rule and the
//!   sequentially biased PET rule.
//! * [`certify`]: the QBCB rule: confidence-bound order statistic selection,
//!   Clopper-Pearson recall bounds and sample-size planners.
//! * [`rules`]: PET, QPET, QBCB, Target and Countdown run against a
//!   completed review trajectory.
//! * [`sim`]: rank records, synthetic collections, constrained positive
//!   sampling, cost accounting and seeded replication.
//! * [`kernel`]: binomial, hypergeometric and order-statistic probabilities.

pub mod certify;
pub mod error;
pub mod kernel;
pub mod level;
pub mod quantile;
pub mod rules;
pub mod sim;

pub use certify::{
    ceiling_sweep, cp_lower_bound, cp_upper_bound, min_sample_for_ucb_at_most,
    min_sample_nontrivial, qbcb_index, qbcb_index_exact, qbcb_stop_index, qbcb_stop_index_exact,
    recall_estimates, table_rows, target_rule_implied_goal, RecallEstimates, StoppingPlan,
    TableRow,
};
pub use error::{Error, Result};
pub use kernel::{OrderStatQuery, Probability};
pub use level::RecallLevel;
pub use quantile::{PositiveSample, Q7Anchor, Q7Estimate};
pub use rules::{PreparedRule, RankRecord, Rule, RuleConfig, StopOutcome};
pub use sim::{CostBreakdown, ReplicationSummary, SyntheticModel};
