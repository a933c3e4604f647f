//! Stopping rules run against a completed review trajectory.
//!
//! A [`RankRecord`] holds the A-ranks of every positive document. A rule
//! reads nothing from it except the positives census and batch boundaries:
//! the stopping rank itself is always an order statistic of the positive
//! sample (or, for Countdown, a count of positives found).

use serde::{Deserialize, Serialize};

use crate::certify::qbcb_stop_index;
use crate::error::{Error, Result};
use crate::kernel::Probability;
use crate::level::RecallLevel;
use crate::quantile::{pet_stop_index, qpet_stop_index, PositiveSample};
use crate::sim::cost::CostBreakdown;

/// Target set size used by the Target rule.
pub const TARGET_SET_SIZE: u64 = 10;

/// A one-phase review carried to exhaustion.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankRecord {
    collection_size: u64,
    positives: Vec<u64>,
    batch_size: u64,
}

impl RankRecord {
    pub fn new(collection_size: u64, positives: Vec<u64>, batch_size: u64) -> Result<Self> {
        if positives.is_empty() {
            return Err(Error::data("a record needs at least one positive"));
        }
        if let Some((i, w)) = positives.windows(2).enumerate().find(|(_, w)| w[0] >= w[1]) {
            let what = if w[0] == w[1] {
                "duplicate"
            } else {
                "out-of-order"
            };
            return Err(Error::data(format!(
                "positives[{}]: {what} rank {} after {}",
                i + 1,
                w[1],
                w[0]
            )));
        }
        let (first, last) = (positives[0], positives[positives.len() - 1]);
        if first == 0 || last > collection_size {
            return Err(Error::data(format!(
                "positive ranks must lie in 1..={collection_size}, found {}",
                if first == 0 { first } else { last }
            )));
        }
        Ok(Self {
            collection_size,
            positives,
            batch_size,
        })
    }

    pub fn with_batch_size(mut self, batch_size: u64) -> Self {
        self.batch_size = batch_size;
        self
    }

    pub fn collection_size(&self) -> u64 {
        self.collection_size
    }

    pub fn positives(&self) -> &[u64] {
        &self.positives
    }

    /// Size of the positive subpopulation, `R`.
    pub fn positive_count(&self) -> u64 {
        self.positives.len() as u64
    }

    pub fn batch_size(&self) -> u64 {
        self.batch_size
    }

    /// `ceil(N / batch_size)`, or 0 at rank granularity.
    pub fn batch_count(&self) -> u64 {
        if self.batch_size == 0 {
            0
        } else {
            self.collection_size.div_ceil(self.batch_size)
        }
    }

    /// Positives with A-rank at or below `rank`.
    pub fn found_at(&self, rank: u64) -> u64 {
        self.positives.partition_point(|&p| p <= rank) as u64
    }

    /// Fraction of positives reviewed by `rank`.
    pub fn recall_at(&self, rank: u64) -> f64 {
        self.found_at(rank) as f64 / self.positive_count() as f64
    }

    /// A-rank of the `ceil(t R)`-th positive: the lowest rank with recall >= t.
    pub fn t_quantile_rank(&self, t: impl Into<RecallLevel>) -> Result<u64> {
        let t = t.into();
        if t.value() <= 0.0 {
            return Err(Error::domain("quantile level must be positive"));
        }
        let k = t.ceil_mul(self.positive_count()).max(1);
        Ok(self.positives[k as usize - 1])
    }

    /// Batch containing `rank` (1-based), or 0 at rank granularity.
    pub fn batch_of(&self, rank: u64) -> u64 {
        if self.batch_size == 0 {
            0
        } else {
            rank.div_ceil(self.batch_size)
        }
    }

    /// Last rank of the batch containing `rank`; `rank` itself when unbatched.
    pub fn batch_end(&self, rank: u64) -> u64 {
        if self.batch_size == 0 {
            rank
        } else {
            (self.batch_of(rank) * self.batch_size).min(self.collection_size)
        }
    }

    pub fn contains_positive(&self, rank: u64) -> bool {
        self.positives.binary_search(&rank).is_ok()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "lowercase")]
pub enum Rule {
    Pet,
    Qpet,
    Qbcb {
        alpha: f64,
    },
    Target,
    /// `sample_total` is the number of documents drawn to obtain the sample;
    /// `None` uses the sample's own draw count.
    Countdown {
        sample_total: Option<u64>,
    },
}

impl Rule {
    pub fn name(&self) -> &'static str {
        match self {
            Rule::Pet => "pet",
            Rule::Qpet => "qpet",
            Rule::Qbcb { .. } => "qbcb",
            Rule::Target => "target",
            Rule::Countdown { .. } => "countdown",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RuleConfig {
    pub rule: Rule,
    pub recall_goal: RecallLevel,
    pub sample_positives: u64,
}

impl RuleConfig {
    pub fn new(
        rule: Rule,
        sample_positives: u64,
        recall_goal: impl Into<RecallLevel>,
    ) -> Result<Self> {
        let config = Self {
            rule,
            recall_goal: recall_goal.into(),
            sample_positives,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn pet(r: u64, t: impl Into<RecallLevel>) -> Result<Self> {
        Self::new(Rule::Pet, r, t)
    }

    pub fn qpet(r: u64, t: impl Into<RecallLevel>) -> Result<Self> {
        Self::new(Rule::Qpet, r, t)
    }

    pub fn qbcb(r: u64, t: impl Into<RecallLevel>, alpha: f64) -> Result<Self> {
        Self::new(Rule::Qbcb { alpha }, r, t)
    }

    pub fn target(t: impl Into<RecallLevel>) -> Result<Self> {
        Self::new(Rule::Target, TARGET_SET_SIZE, t)
    }

    pub fn countdown(r: u64, t: impl Into<RecallLevel>, sample_total: Option<u64>) -> Result<Self> {
        Self::new(Rule::Countdown { sample_total }, r, t)
    }

    pub fn validate(&self) -> Result<()> {
        let t = self.recall_goal;
        let r = self.sample_positives;
        if r == 0 {
            return Err(Error::config("sample must contain at least one positive"));
        }
        match self.rule {
            Rule::Countdown { sample_total } => {
                if t.value() <= 0.0 {
                    return Err(Error::config("countdown goal must be positive"));
                }
                if let Some(n) = sample_total {
                    if n < r {
                        return Err(Error::config(format!(
                            "sample total {n} is smaller than its {r} positives"
                        )));
                    }
                }
                return Ok(());
            }
            Rule::Target if r != TARGET_SET_SIZE => {
                return Err(Error::config(format!(
                    "the Target rule uses exactly {TARGET_SET_SIZE} positives, got {r}"
                )));
            }
            Rule::Qpet if r < 2 => {
                return Err(Error::config("QPET needs at least 2 sampled positives"));
            }
            Rule::Qbcb { alpha } => {
                Probability::open(alpha)?;
            }
            _ => {}
        }
        if !t.is_interior() {
            return Err(Error::config(format!("recall goal {t} must lie in (0, 1)")));
        }
        if let Rule::Qbcb { alpha } = self.rule {
            if qbcb_stop_index(r, t, alpha)? > r {
                return Err(Error::config(format!(
                    "QBCB with r={r}, t={t}, alpha={alpha} is trivial (j = r + 1)"
                )));
            }
        }
        Ok(())
    }

    /// Which sampled positive (1-based) the rule stops at. Countdown has no
    /// sample index and returns `None`.
    pub fn stop_index(&self) -> Result<Option<u64>> {
        let (r, t) = (self.sample_positives, self.recall_goal);
        let index = match self.rule {
            Rule::Pet => pet_stop_index(r, t)?,
            Rule::Qpet => qpet_stop_index(r, t)?,
            Rule::Qbcb { alpha } => {
                let index = qbcb_stop_index(r, t, alpha)?;
                if index > r {
                    return Err(Error::config(format!("QBCB plan for r={r} is trivial")));
                }
                index
            }
            Rule::Target => r,
            Rule::Countdown { .. } => return Ok(None),
        };
        Ok(Some(index))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StopOutcome {
    /// `None` when the rule never fires before the collection is exhausted.
    pub stop_rank: Option<u64>,
    /// Batch of the stopping rank (1-based); 0 at rank granularity.
    pub stop_batch: u64,
    pub achieved_recall: f64,
    pub cost: CostBreakdown,
}

impl StopOutcome {
    pub fn stopped(&self) -> bool {
        self.stop_rank.is_some()
    }
}

fn outcome(
    record: &RankRecord,
    sample_pos: u64,
    sample_neg: u64,
    raw_stop: Option<u64>,
    goal: RecallLevel,
) -> Result<StopOutcome> {
    let stop_rank = raw_stop.map(|r| record.batch_end(r));
    let (stop_batch, achieved_recall) = match stop_rank {
        Some(rank) => (record.batch_of(rank), record.recall_at(rank)),
        None => (record.batch_count(), 1.0),
    };
    let cost = CostBreakdown::compute(record, sample_pos, sample_neg, stop_rank, goal)?;
    Ok(StopOutcome {
        stop_rank,
        stop_batch,
        achieved_recall,
        cost,
    })
}

fn check_sample(record: &RankRecord, sample: &PositiveSample, r: u64) -> Result<()> {
    if sample.len() as u64 != r {
        return Err(Error::config(format!(
            "rule expects {r} sampled positives, sample has {}",
            sample.len()
        )));
    }
    if let Some(bad) = sample
        .ranks()
        .iter()
        .find(|&&d| !record.contains_positive(d))
    {
        return Err(Error::data(format!(
            "sampled rank {bad} is not a positive of the record"
        )));
    }
    Ok(())
}

/// A validated rule with its stop index resolved once.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PreparedRule {
    config: RuleConfig,
    index: Option<u64>,
}

impl PreparedRule {
    pub fn new(config: RuleConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            index: config.stop_index()?,
        })
    }

    pub fn config(&self) -> &RuleConfig {
        &self.config
    }

    /// Sampled positive the rule stops at; `None` for Countdown.
    pub fn index(&self) -> Option<u64> {
        self.index
    }

    pub fn run(&self, record: &RankRecord, sample: &PositiveSample) -> Result<StopOutcome> {
        let config = &self.config;
        let r = config.sample_positives;
        check_sample(record, sample, r)?;
        match self.index {
            Some(index) => {
                let raw = sample.order_stat(index)?;
                let neg = sample.draw_count().saturating_sub(r);
                outcome(record, r, neg, Some(raw), config.recall_goal)
            }
            None => {
                let n = match config.rule {
                    Rule::Countdown {
                        sample_total: Some(n),
                    } => n,
                    _ => sample.draw_count(),
                };
                if n == 0 {
                    return Err(Error::config(
                        "countdown needs the sample's total draw count",
                    ));
                }
                run_countdown(record, n, r, config.recall_goal)
            }
        }
    }
}

/// Applies a rule to one positive sample. With `batch_size > 0` the stop is
/// deferred to the end of the batch containing the triggering document.
pub fn run_rule(
    record: &RankRecord,
    sample: &PositiveSample,
    config: &RuleConfig,
) -> Result<StopOutcome> {
    PreparedRule::new(*config)?.run(record, sample)
}

/// Positives Countdown waits for: `ceil(t N r / n)`.
pub fn countdown_target(record: &RankRecord, n: u64, r: u64, t: impl Into<RecallLevel>) -> u64 {
    t.into().ceil_mul_ratio(record.collection_size() * r, n)
}

/// Countdown's recall estimate `found(rank) n / (N r)`; exceeds 1 whenever
/// the prevalence estimate is low.
pub fn countdown_estimate(record: &RankRecord, rank: u64, n: u64, r: u64) -> f64 {
    record.found_at(rank) as f64 * n as f64 / (record.collection_size() as f64 * r as f64)
}

/// The Countdown rule: stop once the number of positives found reaches the
/// sample-based estimate of `t R`. Never fires if that estimate exceeds `R`.
pub fn run_countdown(
    record: &RankRecord,
    n: u64,
    r: u64,
    t: impl Into<RecallLevel>,
) -> Result<StopOutcome> {
    let t = t.into();
    if r == 0 || n < r {
        return Err(Error::config(format!(
            "countdown needs n >= r >= 1, got n={n}, r={r}"
        )));
    }
    let target = countdown_target(record, n, r, t).max(1);
    let raw = (target <= record.positive_count()).then(|| record.positives()[target as usize - 1]);
    outcome(record, r, n - r, raw, t)
}
