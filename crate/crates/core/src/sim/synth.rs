use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rules::RankRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    /// Positives scattered uniformly over the review order.
    Uniform,
    /// Positives front-loaded: inclusion probability decays as
    /// `exp(-decay * rank / N)`. Smaller decay models a harder topic.
    GeometricDecay,
    /// Every document is relevant.
    AllRelevant,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticModel {
    pub family: Family,
    pub collection_size: u64,
    pub prevalence: f64,
    pub decay: f64,
}

pub const DEFAULT_DECAY: f64 = 5.0;

impl SyntheticModel {
    pub fn uniform(collection_size: u64, prevalence: f64) -> Self {
        Self {
            family: Family::Uniform,
            collection_size,
            prevalence,
            decay: 0.0,
        }
    }

    pub fn geometric(collection_size: u64, prevalence: f64, decay: f64) -> Self {
        Self {
            family: Family::GeometricDecay,
            collection_size,
            prevalence,
            decay,
        }
    }

    pub fn all_relevant(collection_size: u64) -> Self {
        Self {
            family: Family::AllRelevant,
            collection_size,
            prevalence: 1.0,
            decay: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.collection_size == 0 {
            return Err(Error::domain("collection size must be positive"));
        }
        if self.family == Family::AllRelevant {
            return Ok(());
        }
        if !(self.prevalence > 0.0 && self.prevalence <= 1.0) {
            return Err(Error::domain(format!(
                "prevalence {} must lie in (0, 1]",
                self.prevalence
            )));
        }
        if self.expected_positives() < 1.0 {
            return Err(Error::domain(format!(
                "expected positive count N * prevalence = {} is below 1",
                self.expected_positives()
            )));
        }
        if self.family == Family::GeometricDecay && !(self.decay > 0.0 && self.decay.is_finite()) {
            return Err(Error::domain(format!(
                "decay {} must be positive",
                self.decay
            )));
        }
        Ok(())
    }

    pub fn expected_positives(&self) -> f64 {
        self.collection_size as f64 * self.prevalence
    }
}

/// Deterministic synthetic record (unbatched) for `(model, seed)`.
pub fn gen_synthetic(model: &SyntheticModel, seed: u64) -> Result<RankRecord> {
    model.validate()?;
    let n = model.collection_size;
    let positives = match model.family {
        Family::AllRelevant => (1..=n).collect(),
        Family::Uniform => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let count = (model.expected_positives() + 1e-9).floor() as usize;
            let mut ranks: Vec<u64> = index::sample(&mut rng, n as usize, count)
                .into_iter()
                .map(|i| i as u64 + 1)
                .collect();
            ranks.sort_unstable();
            ranks
        }
        Family::GeometricDecay => geometric_positives(model, seed),
    };
    RankRecord::new(n, positives, 0)
}

fn geometric_positives(model: &SyntheticModel, seed: u64) -> Vec<u64> {
    let n = model.collection_size;
    let weights: Vec<f64> = (1..=n)
        .map(|rank| (-model.decay * rank as f64 / n as f64).exp())
        .collect();
    let target = model.expected_positives();
    let expected = |c: f64| weights.iter().map(|w| (c * w).min(1.0)).sum::<f64>();
    // Scale so the expected count hits N * prevalence; inclusion is capped at 1.
    let (mut lo, mut hi) = (0.0, 1.0 / weights[weights.len() - 1]);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if expected(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let scale = hi;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let ranks: Vec<u64> = weights
            .iter()
            .zip(1..=n)
            .filter(|(w, _)| rng.random::<f64>() < (scale * *w).min(1.0))
            .map(|(_, rank)| rank)
            .collect();
        if !ranks.is_empty() {
            return ranks;
        }
    }
}
