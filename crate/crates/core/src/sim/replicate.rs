//! Seeded replication of a rule over independent positive samples.
//!
//! Replication `i` draws its sample from the seed `derive_seed(master, 0, i)`,
//! so results do not depend on scheduling, and adding replications leaves the
//! earlier ones untouched.

#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rules::{PreparedRule, RankRecord, RuleConfig, StopOutcome};
use crate::sim::sampling::draw_positive_sample;
use crate::sim::summary::BoxStats;

/// How replications are scheduled. Output is identical either way; without
/// the `parallel` feature `Parallel` runs sequentially.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

fn mix(mut z: u64) -> u64 {
    // splitmix64 finalizer
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// Seed for item `index` of stream `stream` under `master`.
pub fn derive_seed(master: u64, stream: u64, index: u64) -> u64 {
    let base = mix(master.wrapping_add(GOLDEN.wrapping_mul(stream.wrapping_add(1))));
    mix(base ^ mix(index.wrapping_add(GOLDEN)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepOutcome {
    pub rep: usize,
    pub seed: u64,
    pub outcome: StopOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationSummary {
    pub per_rep: Vec<RepOutcome>,
    pub recall_stats: BoxStats,
    pub cost_stats: BoxStats,
}

impl ReplicationSummary {
    fn from_reps(per_rep: Vec<RepOutcome>) -> Self {
        let recalls: Vec<f64> = per_rep.iter().map(|r| r.outcome.achieved_recall).collect();
        let costs: Vec<f64> = per_rep
            .iter()
            .map(|r| r.outcome.cost.total as f64)
            .collect();
        Self {
            recall_stats: BoxStats::from_values(&recalls).expect("at least one replication"),
            cost_stats: BoxStats::from_values(&costs).expect("at least one replication"),
            per_rep,
        }
    }

    /// Fraction of replications with achieved recall at least `goal`.
    pub fn coverage(&self, goal: f64) -> f64 {
        let hits = self
            .per_rep
            .iter()
            .filter(|r| r.outcome.achieved_recall >= goal)
            .count();
        hits as f64 / self.per_rep.len() as f64
    }

    pub fn no_stop_count(&self) -> usize {
        self.per_rep.iter().filter(|r| !r.outcome.stopped()).count()
    }

    /// Mean achieved recall and its standard error.
    pub fn mean_recall(&self) -> (f64, f64) {
        let n = self.per_rep.len() as f64;
        let mean = self.recall_stats.mean;
        if self.per_rep.len() < 2 {
            return (mean, 0.0);
        }
        let ss: f64 = self
            .per_rep
            .iter()
            .map(|r| (r.outcome.achieved_recall - mean).powi(2))
            .sum();
        (mean, (ss / (n - 1.0) / n).sqrt())
    }
}

fn run_one(
    record: &RankRecord,
    rule: &PreparedRule,
    master_seed: u64,
    rep: usize,
) -> Result<RepOutcome> {
    let seed = derive_seed(master_seed, 0, rep as u64);
    let wrap = |e: Error| Error::Replication {
        rep,
        seed,
        source: Box::new(e),
    };
    let sample =
        draw_positive_sample(record, rule.config().sample_positives, seed).map_err(wrap)?;
    let outcome = rule.run(record, &sample).map_err(wrap)?;
    Ok(RepOutcome { rep, seed, outcome })
}

pub fn replicate(
    record: &RankRecord,
    config: &RuleConfig,
    reps: usize,
    master_seed: u64,
) -> Result<ReplicationSummary> {
    replicate_with(record, config, reps, master_seed, Execution::default())
}

pub fn replicate_with(
    record: &RankRecord,
    config: &RuleConfig,
    reps: usize,
    master_seed: u64,
    execution: Execution,
) -> Result<ReplicationSummary> {
    if reps == 0 {
        return Err(Error::config("at least one replication is required"));
    }
    let rule = PreparedRule::new(*config)?;
    if config.sample_positives > record.positive_count() {
        return Err(Error::data(format!(
            "cannot sample {} positives from a record with {}",
            config.sample_positives,
            record.positive_count()
        )));
    }
    let results: Vec<Result<RepOutcome>> = match execution {
        #[cfg(feature = "parallel")]
        Execution::Parallel => (0..reps)
            .into_par_iter()
            .map(|rep| run_one(record, &rule, master_seed, rep))
            .collect(),
        #[cfg(not(feature = "parallel"))]
        Execution::Parallel => (0..reps)
            .map(|rep| run_one(record, &rule, master_seed, rep))
            .collect(),
        Execution::Sequential => (0..reps)
            .map(|rep| run_one(record, &rule, master_seed, rep))
            .collect(),
    };
    let per_rep = results.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(ReplicationSummary::from_reps(per_rep))
}
