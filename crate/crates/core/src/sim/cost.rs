use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::level::RecallLevel;
use crate::quantile::PositiveSample;
use crate::rules::RankRecord;

/// Review cost at a stopping point, in documents.
///
/// The sample is assumed to be reviewed separately from the main review, so
/// a document met in both is counted in both.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub sample_pos: u64,
    pub sample_neg: u64,
    pub review_pos: u64,
    pub review_neg: u64,
    /// Documents still needed to reach the goal by continuing in record
    /// order. This continuation proxy upper-bounds a re-ranked second phase.
    pub phase2_penalty: u64,
    pub total: u64,
}

impl CostBreakdown {
    /// `stop_rank = None` means the review ran through the whole collection.
    pub fn compute(
        record: &RankRecord,
        sample_pos: u64,
        sample_neg: u64,
        stop_rank: Option<u64>,
        goal: impl Into<RecallLevel>,
    ) -> Result<Self> {
        let goal = goal.into();
        let reviewed = stop_rank
            .unwrap_or(record.collection_size())
            .min(record.collection_size());
        let review_pos = record.found_at(reviewed);
        let review_neg = reviewed - review_pos;
        let phase2_penalty = if goal.value() > 0.0 && record.recall_at(reviewed) < goal.value() {
            record.t_quantile_rank(goal)? - reviewed
        } else {
            0
        };
        Ok(Self {
            sample_pos,
            sample_neg,
            review_pos,
            review_neg,
            phase2_penalty,
            total: sample_pos + sample_neg + review_pos + review_neg + phase2_penalty,
        })
    }

    pub fn review_total(&self) -> u64 {
        self.review_pos + self.review_neg
    }
}

pub fn cost_breakdown(
    record: &RankRecord,
    sample: &PositiveSample,
    stop_rank: Option<u64>,
    goal: impl Into<RecallLevel>,
) -> Result<CostBreakdown> {
    let r = sample.len() as u64;
    CostBreakdown::compute(
        record,
        r,
        sample.draw_count().saturating_sub(r),
        stop_rank,
        goal,
    )
}
