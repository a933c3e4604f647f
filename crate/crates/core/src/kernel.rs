//! Combinatorial probability kernels.
//!
//! Binomial and hypergeometric sums are evaluated from log-space terms with a
//! max shift, so they stay finite for sample sizes far beyond the ones used by
//! the planners. Individual terms are generated outward from the mode by
//! ratio recurrences; only the mode term needs a full [`log_choose`].
//!
//! Cumulative scans (used by the index search in [`crate::certify`]) and the
//! standalone `*_cdf_below` functions share one summation routine, so a
//! threshold found by a scan agrees bit-for-bit with a direct evaluation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::level::RecallLevel;

/// A value in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct Probability(f64);

impl Probability {
    pub fn new(value: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&value) {
            Ok(Self(value))
        } else {
            Err(Error::domain(format!(
                "probability {value} is outside [0, 1]"
            )))
        }
    }

    /// Strictly inside `(0, 1)`, as required for significance levels.
    pub fn open(value: f64) -> Result<Self> {
        if value > 0.0 && value < 1.0 {
            Ok(Self(value))
        } else {
            Err(Error::domain(format!(
                "{value} is not strictly inside (0, 1)"
            )))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Order statistic query: the `k`-th smallest of `n` ranks drawn without
/// replacement from `1..=N`, evaluated at rank `a`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OrderStatQuery {
    pub population: u64,
    pub sample: u64,
    pub order: u64,
    pub value: u64,
}

impl OrderStatQuery {
    pub fn new(population: u64, sample: u64, order: u64, value: u64) -> Result<Self> {
        if !(1 <= order && order <= sample && sample <= population) {
            return Err(Error::domain(format!(
                "need 1 <= k <= n <= N, got k={order}, n={sample}, N={population}"
            )));
        }
        if !(1..=population).contains(&value) {
            return Err(Error::domain(format!(
                "rank {value} outside 1..={population}"
            )));
        }
        Ok(Self {
            population,
            sample,
            order,
            value,
        })
    }
}

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

/// `ln n! - ((n + 1/2) ln n - n + ln sqrt(2 pi))` for integers `1..=15`.
#[allow(clippy::excessive_precision)]
const STIRLING_ERROR: [f64; 16] = [
    0.0,
    0.081_061_466_795_327_26,
    0.041_340_695_955_409_29,
    0.027_677_925_684_998_34,
    0.020_790_672_103_765_09,
    0.016_644_691_189_821_19,
    0.013_876_128_823_070_75,
    0.011_896_709_945_891_77,
    0.010_411_265_261_972_10,
    0.009_255_462_182_712_733,
    0.008_330_563_433_362_871,
    0.007_573_675_487_951_841,
    0.006_942_840_107_209_530,
    0.006_408_994_188_004_207,
    0.005_951_370_112_758_848,
    0.005_554_733_551_962_801,
];

fn stirling_error(n: u64) -> f64 {
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;
    if n < 16 {
        return STIRLING_ERROR[n as usize];
    }
    let x = n as f64;
    let x2 = x * x;
    if n > 500 {
        (S0 - S1 / x2) / x
    } else if n > 80 {
        (S0 - (S1 - S2 / x2) / x2) / x
    } else if n > 35 {
        (S0 - (S1 - (S2 - S3 / x2) / x2) / x2) / x
    } else {
        (S0 - (S1 - (S2 - (S3 - S4 / x2) / x2) / x2) / x2) / x
    }
}

/// `ln C(n, k)` without the `k <= n` check.
pub(crate) fn ln_choose(n: u64, k: u64) -> f64 {
    debug_assert!(k <= n);
    let k = k.min(n - k);
    if k == 0 {
        return 0.0;
    }
    if n <= 60 {
        // Exact in u128 for n <= 60 (C(60, 30) ~ 1.2e17).
        return (choose_exact(n, k).unwrap() as f64).ln();
    }
    let (nf, kf) = (n as f64, k as f64);
    let rest = (n - k) as f64;
    let main = kf * (nf / kf).ln() - rest * (-kf / nf).ln_1p();
    let half = 0.5 * ((nf / kf).ln() - rest.ln());
    main + half + stirling_error(n) - stirling_error(k) - stirling_error(n - k) - HALF_LN_2PI
}

/// Natural log of the binomial coefficient `C(n, k)`.
pub fn log_choose(n: u64, k: u64) -> Result<f64> {
    if k > n {
        return Err(Error::domain(format!("log_choose({n}, {k}): k exceeds n")));
    }
    Ok(ln_choose(n, k))
}

/// Exact `C(n, k)`, or `None` on `u128` overflow or `k > n`.
pub fn choose_exact(n: u64, k: u64) -> Option<u128> {
    if k > n {
        return None;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) is divisible by (i + 1) after the multiplication.
        acc = acc.checked_mul((n - i) as u128)? / (i as u128 + 1);
    }
    Some(acc)
}

/// Probability mass of a discrete distribution on `0..=max`, held as log
/// terms. Infeasible support points carry `-inf`.
#[derive(Debug, Clone)]
pub(crate) struct LogMass {
    terms: Vec<f64>,
    shift: f64,
}

impl LogMass {
    /// Fills terms outward from `mode`, given the log mass at the mode and
    /// `log_ratio(k) = ln p(k + 1) - ln p(k)` over the support `lo..=hi`.
    fn from_mode(
        max: u64,
        lo: u64,
        hi: u64,
        mode: u64,
        ln_mode: f64,
        log_ratio: impl Fn(u64) -> f64,
    ) -> Self {
        let mut terms = vec![f64::NEG_INFINITY; max as usize + 1];
        terms[mode as usize] = ln_mode;
        let mut acc = ln_mode;
        for k in mode..hi {
            acc += log_ratio(k);
            terms[k as usize + 1] = acc;
        }
        acc = ln_mode;
        for k in (lo..mode).rev() {
            acc -= log_ratio(k);
            terms[k as usize] = acc;
        }
        Self {
            terms,
            shift: ln_mode,
        }
    }

    fn point(max: u64, at: u64) -> Self {
        let mut terms = vec![f64::NEG_INFINITY; max as usize + 1];
        terms[at as usize] = 0.0;
        Self { terms, shift: 0.0 }
    }

    pub(crate) fn len(&self) -> usize {
        self.terms.len()
    }

    /// `P[X < j]`, clamped into `[0, 1]`.
    pub(crate) fn below(&self, j: usize) -> f64 {
        self.cumulative().nth(j).unwrap_or(1.0)
    }

    /// `P[X >= j]`, summed from the upper end.
    pub(crate) fn at_least(&self, j: usize) -> f64 {
        let acc: f64 = self.terms[j.min(self.terms.len())..]
            .iter()
            .rev()
            .map(|lt| (lt - self.shift).exp())
            .sum();
        (acc * self.shift.exp()).clamp(0.0, 1.0)
    }

    /// Yields `P[X < 0], P[X < 1], ..., P[X < max + 1]`.
    pub(crate) fn cumulative(&self) -> impl Iterator<Item = f64> + '_ {
        let scale = self.shift.exp();
        std::iter::once(0.0).chain(self.terms.iter().scan(0.0f64, move |acc, lt| {
            *acc += (lt - self.shift).exp();
            Some((*acc * scale).clamp(0.0, 1.0))
        }))
    }
}

pub(crate) fn binomial_mass(r: u64, t: f64) -> LogMass {
    if t <= 0.0 {
        return LogMass::point(r, 0);
    }
    if t >= 1.0 {
        return LogMass::point(r, r);
    }
    let mode = (((r + 1) as f64) * t).floor().min(r as f64) as u64;
    let (ln_t, ln_q) = (t.ln(), (-t).ln_1p());
    let ln_mode = ln_choose(r, mode) + mode as f64 * ln_t + (r - mode) as f64 * ln_q;
    let odds = ln_t - ln_q;
    LogMass::from_mode(r, 0, r, mode, ln_mode, |k| {
        ((r - k) as f64 / (k + 1) as f64).ln() + odds
    })
}

/// Mass of the number of draws from the first `marked` of `population`
/// items when `draws` items are taken without replacement.
pub(crate) fn hypergeometric_mass(population: u64, marked: u64, draws: u64) -> LogMass {
    let unmarked = population - marked;
    let lo = draws.saturating_sub(unmarked);
    let hi = draws.min(marked);
    let mode_est = ((draws + 1) as f64 * (marked + 1) as f64 / (population + 2) as f64).floor();
    let mode = (mode_est as u64).clamp(lo, hi);
    let ln_mode =
        ln_choose(marked, mode) + ln_choose(unmarked, draws - mode) - ln_choose(population, draws);
    LogMass::from_mode(draws, lo, hi, mode, ln_mode, |k| {
        let num = (marked - k) as f64 * (draws - k) as f64;
        let den = (k + 1) as f64 * (unmarked + k + 1 - draws) as f64;
        (num / den).ln()
    })
}

/// `P[Binomial(r, t) <= j - 1]`.
pub fn binomial_cdf_below(r: u64, j: u64, t: f64) -> Result<f64> {
    check_unit(t, "t")?;
    if j > r + 1 {
        return Err(Error::domain(format!("j = {j} exceeds r + 1 = {}", r + 1)));
    }
    if j == 0 {
        return Ok(0.0);
    }
    if j == r + 1 {
        return Ok(1.0);
    }
    Ok(binomial_mass(r, t).below(j as usize))
}

/// `P[Binomial(r, t) >= j]`.
pub fn binomial_cdf_at_least(r: u64, j: u64, t: f64) -> Result<f64> {
    check_unit(t, "t")?;
    if j > r + 1 {
        return Err(Error::domain(format!("j = {j} exceeds r + 1 = {}", r + 1)));
    }
    if j == 0 {
        return Ok(1.0);
    }
    if j == r + 1 {
        return Ok(0.0);
    }
    Ok(binomial_mass(r, t).at_least(j as usize))
}

/// Number of positives whose A-rank lies strictly below the `t`-quantile
/// position `ceil(t R)` of a positive subpopulation of size `R`.
pub fn below_quantile_count(positives: u64, t: RecallLevel) -> u64 {
    t.ceil_mul(positives).saturating_sub(1)
}

/// Probability that fewer than `j` of `r` positives sampled without
/// replacement from `R` fall strictly below the `t`-quantile position.
pub fn hypergeometric_cdf_below(
    positives: u64,
    sample: u64,
    t: impl Into<RecallLevel>,
    j: u64,
) -> Result<f64> {
    let t = t.into();
    if sample > positives {
        return Err(Error::domain(format!(
            "sample size {sample} exceeds population {positives}"
        )));
    }
    if !t.is_interior() {
        return Err(Error::domain(format!("t = {t} must lie in (0, 1)")));
    }
    if j > sample + 1 {
        return Err(Error::domain(format!(
            "j = {j} exceeds r + 1 = {}",
            sample + 1
        )));
    }
    if j == 0 {
        return Ok(0.0);
    }
    if j == sample + 1 {
        return Ok(1.0);
    }
    let marked = below_quantile_count(positives, t);
    Ok(hypergeometric_mass(positives, marked, sample).below(j as usize))
}

/// `P[D_(k) = a]` for the `k`-th order statistic of `n` ranks drawn without
/// replacement from `1..=N`.
pub fn order_stat_pmf(q: OrderStatQuery) -> f64 {
    let OrderStatQuery {
        population,
        sample,
        order,
        value,
    } = q;
    if value < order || population - value < sample - order {
        return 0.0;
    }
    let ln = ln_choose(value - 1, order - 1) + ln_choose(population - value, sample - order)
        - ln_choose(population, sample);
    ln.exp().min(1.0)
}

/// Number of `n`-subsets of `1..=N` whose `k`-th smallest element is `a`,
/// or `None` on `u128` overflow. Dividing by `C(N, n)` gives the exact pmf.
pub fn order_stat_count(q: OrderStatQuery) -> Option<u128> {
    let OrderStatQuery {
        population,
        sample,
        order,
        value,
    } = q;
    if value < order || population - value < sample - order {
        return Some(0);
    }
    choose_exact(value - 1, order - 1)?
        .checked_mul(choose_exact(population - value, sample - order)?)
}

/// `E[D_(k)] = k (N + 1) / (n + 1)`.
pub fn order_stat_mean(population: u64, sample: u64, order: u64) -> Result<f64> {
    if !(1 <= order && order <= sample && sample <= population) {
        return Err(Error::domain(format!(
            "need 1 <= k <= n <= N, got k={order}, n={sample}, N={population}"
        )));
    }
    Ok(order as f64 * (population + 1) as f64 / (sample + 1) as f64)
}

fn check_unit(x: f64, name: &str) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} = {x} is outside [0, 1]")))
    }
}

#[cfg(test)]
#[allow(clippy::excessive_precision)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rel_err(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn log_choose_small_values() {
        assert_eq!(log_choose(0, 0).unwrap(), 0.0);
        assert!((log_choose(4, 2).unwrap() - 6f64.ln()).abs() < 1e-15);
        assert!(log_choose(3, 4).is_err());
    }

    #[test]
    fn log_choose_matches_exact_integers() {
        for n in 0..=60u64 {
            for k in 0..=n {
                let exact = (choose_exact(n, k).unwrap() as f64).ln();
                let got = log_choose(n, k).unwrap();
                if exact == 0.0 {
                    assert_eq!(got, 0.0);
                } else {
                    assert!(rel_err(got, exact) < 1e-12, "C({n},{k})");
                }
            }
        }
        assert!((log_choose(52, 5).unwrap() - 2_598_960f64.ln()).abs() < 1e-13);
    }

    #[test]
    fn log_choose_large_arguments() {
        // Reference values from 40-digit arithmetic.
        let cases = [
            (10_000_000, 1, 16.118_095_650_958_319_788),
            (10_000_000, 3, 46.562_527_183_646_879_36),
            (10_000_000, 5_000_000, 6_931_463.520_760_249_97),
            (10_000_000, 12_345, 95_007.314_861_465_253_84),
            (123_456, 60_000, 85_518.711_531_426_987_99),
            (100_000, 17, 162.213_299_379_550_828_3),
            (1000, 500, 689.467_261_567_851_180_1),
        ];
        for (n, k, want) in cases {
            let got = log_choose(n, k).unwrap();
            assert!(
                rel_err(got, want) < 1e-12,
                "ln C({n},{k}) = {got}, want {want}"
            );
        }
    }

    #[test]
    fn stirling_table_continues_into_series() {
        // The 16 -> series hand-off should be smooth.
        let direct = 1.0 / (12.0 * 16.0) - 1.0 / (360.0 * 16f64.powi(3));
        assert!((stirling_error(16) - direct).abs() < 1e-8);
    }

    #[test]
    fn binomial_examples() {
        assert_eq!(binomial_cdf_below(10, 0, 0.3).unwrap(), 0.0);
        assert!((binomial_cdf_below(2, 2, 0.5).unwrap() - 0.75).abs() < 1e-15);
        let at21 = binomial_cdf_below(22, 21, 0.8).unwrap();
        let at20 = binomial_cdf_below(22, 20, 0.8).unwrap();
        assert!(at21 >= 0.95 && (at21 - 0.952).abs() < 1e-3, "{at21}");
        assert!(at20 < 0.95 && (at20 - 0.846).abs() < 1e-3, "{at20}");
        assert_eq!(binomial_cdf_below(5, 6, 0.4).unwrap(), 1.0);
        assert!(binomial_cdf_below(5, 7, 0.4).is_err());
        assert!(binomial_cdf_below(5, 2, 1.5).is_err());
    }

    #[test]
    fn binomial_degenerate_success_probabilities() {
        assert_eq!(binomial_cdf_below(5, 1, 0.0).unwrap(), 1.0);
        assert_eq!(binomial_cdf_below(5, 5, 1.0).unwrap(), 0.0);
        assert_eq!(binomial_cdf_at_least(5, 5, 1.0).unwrap(), 1.0);
    }

    /// Direct summation in linear space, independent of the log-mass path.
    fn binomial_below_oracle(r: u64, j: u64, t: f64) -> f64 {
        (0..j)
            .map(|k| {
                choose_exact(r, k).unwrap() as f64
                    * t.powi(k as i32)
                    * (1.0 - t).powi((r - k) as i32)
            })
            .sum()
    }

    #[test]
    fn binomial_matches_direct_summation() {
        for r in [1u64, 2, 7, 14, 22, 50, 100] {
            for j in 0..=r + 1 {
                for t in [0.1, 0.5, 0.8, 0.95] {
                    let want = binomial_below_oracle(r, j, t);
                    let got = binomial_cdf_below(r, j, t).unwrap();
                    assert!((got - want).abs() < 1e-12, "r={r} j={j} t={t}");
                    let upper = binomial_cdf_at_least(r, j, t).unwrap();
                    assert!((got + upper - 1.0).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn binomial_survives_huge_samples() {
        let r = 100_000;
        let p = binomial_cdf_below(r, 80_000, 0.8).unwrap();
        assert!(p > 0.4 && p < 0.6, "{p}");
        assert!(binomial_cdf_below(r, 79_000, 0.8).unwrap() < 1e-10);
        assert!(binomial_cdf_below(r, 81_000, 0.8).unwrap() > 1.0 - 1e-10);
    }

    /// All `r`-subsets of `0..R`, counting members below `marked`.
    fn hypergeometric_below_oracle(big_r: u64, r: u64, marked: u64, j: u64) -> f64 {
        let (mut hits, mut total) = (0u64, 0u64);
        for mask in 0u32..(1 << big_r) {
            if mask.count_ones() as u64 != r {
                continue;
            }
            total += 1;
            let below = (mask & ((1u32 << marked) - 1)).count_ones() as u64;
            if below < j {
                hits += 1;
            }
        }
        hits as f64 / total as f64
    }

    #[test]
    fn hypergeometric_examples() {
        let p = hypergeometric_cdf_below(5, 2, 0.8, 1).unwrap();
        assert!((p - 0.1).abs() < 1e-14, "{p}");
        // Full census: 7 ranks below the position ceil(0.8 * 10) = 8.
        assert_eq!(hypergeometric_cdf_below(10, 10, 0.8, 7).unwrap(), 0.0);
        assert!((hypergeometric_cdf_below(10, 10, 0.8, 8).unwrap() - 1.0).abs() < 1e-14);
        let exact = hypergeometric_cdf_below(1_000_000, 50, 0.8, 45).unwrap();
        let approx = binomial_cdf_below(50, 45, 0.8).unwrap();
        assert!((exact - approx).abs() < 1e-3);
        assert!(hypergeometric_cdf_below(4, 5, 0.8, 1).is_err());
    }

    #[test]
    fn hypergeometric_matches_enumeration() {
        for big_r in 1..=12u64 {
            for r in 1..=big_r {
                for (num, den) in [(1, 2), (3, 4), (4, 5), (9, 10)] {
                    let t = RecallLevel::from_ratio(num, den).unwrap();
                    let marked = below_quantile_count(big_r, t);
                    for j in 0..=r + 1 {
                        let want = hypergeometric_below_oracle(big_r, r, marked, j);
                        let got = hypergeometric_cdf_below(big_r, r, t, j).unwrap();
                        assert!(
                            (got - want).abs() < 1e-12,
                            "R={big_r} r={r} t={num}/{den} j={j}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn order_stat_examples() {
        let q = |n, s, k, a| OrderStatQuery::new(n, s, k, a).unwrap();
        assert!((order_stat_pmf(q(4, 2, 1, 1)) - 0.5).abs() < 1e-15);
        assert_eq!(order_stat_pmf(q(5, 5, 3, 3)), 1.0);
        assert_eq!(order_stat_pmf(q(10, 4, 2, 1)), 0.0);
        assert_eq!(order_stat_count(q(4, 2, 1, 1)), Some(3));
        assert!(OrderStatQuery::new(4, 5, 1, 1).is_err());
        assert!(OrderStatQuery::new(4, 2, 1, 5).is_err());
    }

    #[test]
    fn order_stat_mean_examples() {
        assert_eq!(order_stat_mean(99, 9, 5).unwrap(), 50.0);
        assert_eq!(order_stat_mean(7, 7, 3).unwrap(), 3.0);
        assert_eq!(order_stat_mean(1000, 10, 5).unwrap(), 455.0);
        let by_sum: f64 = (1..=99)
            .map(|a| a as f64 * order_stat_pmf(OrderStatQuery::new(99, 9, 5, a).unwrap()))
            .sum();
        assert!((by_sum - 50.0).abs() < 1e-9);
    }

    #[test]
    fn hypergeometric_index_never_exceeds_binomial_index() {
        let alpha = 0.05;
        let first = |cdf: &dyn Fn(u64) -> f64, r: u64| {
            (0..=r + 1).find(|&j| cdf(j) >= 1.0 - alpha).unwrap()
        };
        for t in [0.6, 0.8, 0.9] {
            for big_r in [20u64, 57, 200, 1000] {
                for r in [1u64, 5, 14, 19].into_iter().filter(|&r| r <= big_r) {
                    let jh = first(&|j| hypergeometric_cdf_below(big_r, r, t, j).unwrap(), r);
                    let jb = first(&|j| binomial_cdf_below(r, j, t).unwrap(), r);
                    assert!(jh <= jb, "t={t} R={big_r} r={r}: {jh} > {jb}");
                }
            }
        }
    }

    proptest! {
        #[test]
        fn order_stat_pmf_sums_to_one(n_pop in 1u64..300, frac in 0.0f64..1.0, kfrac in 0.0f64..1.0) {
            let n = 1 + ((n_pop - 1) as f64 * frac) as u64;
            let k = 1 + ((n - 1) as f64 * kfrac) as u64;
            let mut total = 0.0;
            let mut mean = 0.0;
            for a in 1..=n_pop {
                let p = order_stat_pmf(OrderStatQuery::new(n_pop, n, k, a).unwrap());
                total += p;
                mean += a as f64 * p;
            }
            prop_assert!((total - 1.0).abs() < 1e-10);
            if n_pop <= 200 {
                prop_assert!((mean - order_stat_mean(n_pop, n, k).unwrap()).abs() < 1e-9);
            }
        }

        #[test]
        fn binomial_monotone_in_j_and_t(r in 1u64..400, j in 0u64..400, t in 0.01f64..0.99, dt in 0.0f64..0.2) {
            let j = j.min(r);
            let lo = binomial_cdf_below(r, j, t).unwrap();
            let hi = binomial_cdf_below(r, j + 1, t).unwrap();
            prop_assert!(lo <= hi);
            let t2 = (t + dt).min(1.0);
            prop_assert!(binomial_cdf_below(r, j, t2).unwrap() <= lo * (1.0 + 1e-12) + 1e-15);
        }

        #[test]
        fn kernels_are_pure(r in 1u64..2000, j in 0u64..2000, t in 0.0f64..1.0) {
            let j = j.min(r + 1);
            let a = binomial_cdf_below(r, j, t).unwrap();
            let b = binomial_cdf_below(r, j, t).unwrap();
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
    }
}
