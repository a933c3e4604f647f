//! Simple random samples constrained to contain exactly `r` positives.
//!
//! Documents are drawn without replacement until the `r`-th positive turns
//! up (inverse sampling). In a uniformly random draw order the
//! positive/negative pattern is independent of which positives appear, so
//! the draw is split into two exact steps: a sequential urn walk over
//! positive and negative counts that yields the total draw count, and a
//! uniform `r`-subset of the positives that yields their A-ranks.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::quantile::PositiveSample;
use crate::rules::RankRecord;

pub fn draw_positive_sample(record: &RankRecord, r: u64, seed: u64) -> Result<PositiveSample> {
    let big_r = record.positive_count();
    if r == 0 || r > big_r {
        return Err(Error::data(format!(
            "cannot sample {r} positives from a record with {big_r}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let (mut pos_left, mut neg_left) = (big_r, record.collection_size() - big_r);
    let (mut found, mut draws) = (0u64, 0u64);
    while found < r {
        draws += 1;
        if neg_left == 0 || rng.random_range(0..pos_left + neg_left) < pos_left {
            pos_left -= 1;
            found += 1;
        } else {
            neg_left -= 1;
        }
    }

    let positives = record.positives();
    let ranks = index::sample(&mut rng, big_r as usize, r as usize)
        .into_iter()
        .map(|i| positives[i])
        .collect();
    PositiveSample::from_unsorted(ranks, draws)
}
