//! Cost of stopping at each batch end, and the worst QBCB stopping point
//! observed for each sample size.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::level::RecallLevel;
use crate::rules::{RankRecord, RuleConfig};
use crate::sim::cost::CostBreakdown;
use crate::sim::replicate::{derive_seed, replicate};

/// Review cost if the review stopped after `batch`. Sample costs are not
/// included; they depend on the sample size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub batch: u64,
    pub rank: u64,
    pub recall: f64,
    pub review_pos: u64,
    pub review_neg: u64,
    pub phase2_penalty: u64,
    pub total: u64,
}

/// Most expensive replication for one sample size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorstCase {
    pub sample_size: u64,
    pub stop_index: u64,
    pub rep: usize,
    pub seed: u64,
    pub stop_batch: u64,
    pub recall: f64,
    pub cost: CostBreakdown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostDynamics {
    pub curve: Vec<CurvePoint>,
    pub worst_cases: Vec<WorstCase>,
}

impl CostDynamics {
    pub fn curve_minimum(&self) -> Option<&CurvePoint> {
        self.curve.iter().min_by_key(|p| (p.total, p.batch))
    }
}

pub fn cost_curve(record: &RankRecord, goal: impl Into<RecallLevel>) -> Result<Vec<CurvePoint>> {
    let goal = goal.into();
    let b = record.batch_size();
    if b == 0 {
        return Err(Error::config(
            "cost dynamics require a batched record (batch_size > 0)",
        ));
    }
    (1..=record.batch_count())
        .map(|batch| {
            let rank = (batch * b).min(record.collection_size());
            let c = CostBreakdown::compute(record, 0, 0, Some(rank), goal)?;
            Ok(CurvePoint {
                batch,
                rank,
                recall: record.recall_at(rank),
                review_pos: c.review_pos,
                review_neg: c.review_neg,
                phase2_penalty: c.phase2_penalty,
                total: c.total,
            })
        })
        .collect()
}

/// Per-batch cost curve plus, for each sample size, the worst QBCB stop over
/// `reps` replications (ties go to the earliest replication).
pub fn cost_dynamics(
    record: &RankRecord,
    goal: impl Into<RecallLevel>,
    alpha: f64,
    sample_sizes: &[u64],
    reps: usize,
    master_seed: u64,
) -> Result<CostDynamics> {
    let goal = goal.into();
    let curve = cost_curve(record, goal)?;
    let worst_cases = sample_sizes
        .iter()
        .map(|&r| {
            let config = RuleConfig::qbcb(r, goal, alpha)?;
            let summary = replicate(record, &config, reps, derive_seed(master_seed, 1, r))?;
            let worst = summary
                .per_rep
                .iter()
                .max_by(|a, b| {
                    a.outcome
                        .cost
                        .total
                        .cmp(&b.outcome.cost.total)
                        .then(b.rep.cmp(&a.rep))
                })
                .expect("reps > 0");
            Ok(WorstCase {
                sample_size: r,
                stop_index: config.stop_index()?.unwrap_or(0),
                rep: worst.rep,
                seed: worst.seed,
                stop_batch: worst.outcome.stop_batch,
                recall: worst.outcome.achieved_recall,
                cost: worst.outcome.cost,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CostDynamics { curve, worst_cases })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::synth::{gen_synthetic, SyntheticModel};

    #[test]
    fn all_relevant_curve_is_linear() {
        let rec = gen_synthetic(&SyntheticModel::all_relevant(10_000), 0)
            .unwrap()
            .with_batch_size(100);
        let curve = cost_curve(&rec, 0.5).unwrap();
        assert_eq!(curve.len(), 100);
        for p in &curve {
            assert_eq!(p.review_pos, 100 * p.batch);
            assert_eq!(p.review_neg, 0);
            let want_penalty = 5000u64.saturating_sub(100 * p.batch);
            assert_eq!(p.phase2_penalty, want_penalty, "batch {}", p.batch);
        }
        assert_eq!(curve[49].phase2_penalty, 0);
        assert!(curve[48].phase2_penalty > 0);
    }

    #[test]
    fn unbatched_record_is_rejected() {
        let rec = RankRecord::new(100, vec![1, 50], 0).unwrap();
        assert!(matches!(cost_curve(&rec, 0.5), Err(Error::Config(_))));
    }

    #[test]
    fn worst_cases_sit_above_the_curve() {
        let rec = gen_synthetic(&SyntheticModel::geometric(20_000, 0.02, 4.0), 5)
            .unwrap()
            .with_batch_size(200);
        let dyn_ = cost_dynamics(&rec, 0.8, 0.05, &[14, 30, 50], 40, 17).unwrap();
        let min = dyn_.curve_minimum().unwrap().total;
        for w in &dyn_.worst_cases {
            assert!(w.cost.total >= min);
            let at = dyn_.curve[w.stop_batch as usize - 1].total;
            assert!(w.cost.total >= at);
        }
        // Past the goal-reaching batch the penalty is gone.
        let q = rec.t_quantile_rank(0.8).unwrap();
        for p in dyn_.curve.iter().filter(|p| p.rank >= q) {
            assert_eq!(p.phase2_penalty, 0);
        }
        assert!(cost_dynamics(&rec, 0.8, 0.05, &[13], 5, 0).is_err());
    }
}
