//! Quantile point estimation and the point-estimate stopping rules.
//!
//! Recall at a stopping rank is the fraction of positives with A-rank at or
//! below it, so reaching recall `t` means reaching the `t`-quantile of the
//! positives' A-ranks. The QPET rule estimates that quantile with the Q7
//! estimator (linear interpolation between adjacent order statistics) and
//! stops at the last order statistic the estimator needs. PET stops at the
//! first order statistic where the sample recall `j / r` reaches `t`, which
//! is biased low.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::level::{RecallLevel, INTEGRALITY_TOLERANCE};

/// Sorted A-ranks of sampled positives, plus how many documents were
/// inspected to find them (0 when unknown).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PositiveSample {
    ranks: Vec<u64>,
    draw_count: u64,
}

impl PositiveSample {
    pub fn new(ranks: Vec<u64>, draw_count: u64) -> Result<Self> {
        if ranks.first() == Some(&0) {
            return Err(Error::data("sample ranks must be >= 1"));
        }
        if let Some(w) = ranks.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::data(format!(
                "sample ranks must be strictly increasing ({} then {})",
                w[0], w[1]
            )));
        }
        if draw_count != 0 && draw_count < ranks.len() as u64 {
            return Err(Error::data(format!(
                "draw count {draw_count} is smaller than the {} sampled positives",
                ranks.len()
            )));
        }
        Ok(Self { ranks, draw_count })
    }

    /// Builds a sample from unsorted ranks.
    pub fn from_unsorted(mut ranks: Vec<u64>, draw_count: u64) -> Result<Self> {
        ranks.sort_unstable();
        Self::new(ranks, draw_count)
    }

    pub fn ranks(&self) -> &[u64] {
        &self.ranks
    }

    pub fn len(&self) -> usize {
        self.ranks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranks.is_empty()
    }

    pub fn draw_count(&self) -> u64 {
        self.draw_count
    }

    /// The `j`-th order statistic (1-based).
    pub fn order_stat(&self, j: u64) -> Result<u64> {
        j.checked_sub(1)
            .and_then(|i| self.ranks.get(i as usize))
            .copied()
            .ok_or_else(|| {
                Error::InsufficientSample(format!(
                    "order statistic {j} requested from a sample of {}",
                    self.ranks.len()
                ))
            })
    }
}

/// `h = (r - 1) t + 1` split as `j = floor(h)` and `h - j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Q7Anchor {
    pub h: f64,
    pub j: u64,
    pub fraction: f64,
    #[serde(skip)]
    exact: Option<(u64, u64)>,
}

impl Q7Anchor {
    pub fn is_integer(&self) -> bool {
        self.fraction == 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Q7Estimate {
    /// Interpolated estimate `d_j + (h - j)(d_{j+1} - d_j)`.
    pub raw: f64,
    /// `ceil(raw)`, usable as a stopping rank.
    pub rank: u64,
}

fn interior(t: RecallLevel) -> Result<()> {
    if t.is_interior() {
        Ok(())
    } else {
        Err(Error::domain(format!("recall goal {t} must lie in (0, 1)")))
    }
}

pub fn q7_anchor(r: u64, t: impl Into<RecallLevel>) -> Result<Q7Anchor> {
    let t = t.into();
    interior(t)?;
    if r < 2 {
        return Err(Error::domain(format!(
            "Q7 needs a sample of at least 2, got {r}"
        )));
    }
    let scaled = t.scale(r - 1);
    let j = scaled.whole + 1;
    let exact = t.ratio().map(|(num, den)| {
        let rem = ((r - 1) as u128 * num as u128 % den as u128) as u64;
        (rem, den)
    });
    Ok(Q7Anchor {
        h: j as f64 + scaled.fraction,
        j,
        fraction: scaled.fraction,
        exact,
    })
}

pub fn q7_estimate(sample: &PositiveSample, t: impl Into<RecallLevel>) -> Result<Q7Estimate> {
    let r = sample.len() as u64;
    if r < 2 {
        return Err(Error::InsufficientSample(format!(
            "Q7 needs at least 2 sampled positives, got {r}"
        )));
    }
    let anchor = q7_anchor(r, t)?;
    let low = sample.order_stat(anchor.j)?;
    if anchor.is_integer() {
        return Ok(Q7Estimate {
            raw: low as f64,
            rank: low,
        });
    }
    let high = sample.order_stat(anchor.j + 1)?;
    let gap = high - low;
    let raw = low as f64 + anchor.fraction * gap as f64;
    let offset = match anchor.exact {
        Some((rem, den)) => (rem as u128 * gap as u128).div_ceil(den as u128) as u64,
        None => {
            let x = anchor.fraction * gap as f64;
            let nearest = x.round();
            if (x - nearest).abs() <= INTEGRALITY_TOLERANCE * nearest.max(1.0) {
                nearest as u64
            } else {
                x.ceil() as u64
            }
        }
    };
    Ok(Q7Estimate {
        raw,
        rank: low + offset,
    })
}

/// Count of sampled positives QPET must find before stopping: `j` when `h`
/// is an integer, `j + 1` otherwise.
pub fn qpet_stop_index(r: u64, t: impl Into<RecallLevel>) -> Result<u64> {
    let anchor = q7_anchor(r, t)?;
    Ok(if anchor.is_integer() {
        anchor.j
    } else {
        anchor.j + 1
    })
}

/// `ceil(r t)`: the first sample order statistic where the plug-in recall
/// `j / r` reaches `t`.
pub fn pet_stop_index(r: u64, t: impl Into<RecallLevel>) -> Result<u64> {
    let t = t.into();
    interior(t)?;
    if r == 0 {
        return Err(Error::domain("PET needs a non-empty sample"));
    }
    Ok(t.ceil_mul(r))
}

/// Expected recall of PET at goal 1/2 on a collection of `N` documents that
/// are all relevant, with a sample of `n`: `(1/2)(n/(n+1))((N+1)/N)`.
pub fn pet_expected_recall_all_relevant(population: u64, sample: u64) -> Result<f64> {
    if population == 0 || sample == 0 || population % 2 != 0 || sample % 2 != 0 {
        return Err(Error::domain(format!(
            "N and n must be positive and even, got N={population}, n={sample}"
        )));
    }
    if sample > population {
        return Err(Error::domain(format!(
            "n = {sample} exceeds N = {population}"
        )));
    }
    let (big, small) = (population as f64, sample as f64);
    Ok(0.5 * (small / (small + 1.0)) * ((big + 1.0) / big))
}
