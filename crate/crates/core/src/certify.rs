//! The QBCB rule and its sample-size planners.
//!
//! For a sample of `r` positives, QBCB stops at the `j`-th sampled positive,
//! where `j` is the smallest index for which `[1, D_j]` is a one-sided
//! `1 - alpha` upper confidence interval on the `t`-quantile of the positive
//! subpopulation. With the binomial approximation this is the smallest `j`
//! with `P[Binomial(r, t) <= j - 1] >= 1 - alpha`. When no `j <= r` works the
//! plan is *trivial* (`j = r + 1`, the interval `[1, N]`).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{
    below_quantile_count, binomial_cdf_at_least, binomial_cdf_below, binomial_mass,
    hypergeometric_mass, LogMass, Probability,
};
use crate::level::RecallLevel;

/// Largest sample size the planners will consider.
pub const MAX_PLANNED_SAMPLE: u64 = 1_000_000;

const BISECTION_TOLERANCE: f64 = 1e-13;

/// Clopper-Pearson bounds and the plug-in estimate of recall at `D_j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecallEstimates {
    pub lcb: f64,
    pub plugin: f64,
    pub ucb: f64,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoppingPlan {
    pub sample_size: u64,
    pub recall_goal: RecallLevel,
    pub confidence: f64,
    /// Order statistic to stop at; `sample_size + 1` when trivial.
    pub index: u64,
    pub trivial: bool,
    /// Estimates at `index`, or at the fallback `j* = r` for trivial plans.
    pub estimates: RecallEstimates,
}

impl StoppingPlan {
    pub fn alpha(&self) -> f64 {
        1.0 - self.confidence
    }
}

fn check_goal(t: RecallLevel) -> Result<()> {
    if t.is_interior() {
        Ok(())
    } else {
        Err(Error::domain(format!("recall goal {t} must lie in (0, 1)")))
    }
}

/// First `j` whose cumulative mass `P[X < j]` reaches `confidence`.
fn first_reaching(mass: &LogMass, confidence: f64) -> u64 {
    mass.cumulative()
        .position(|p| p >= confidence)
        .unwrap_or(mass.len()) as u64
}

fn plan(r: u64, t: RecallLevel, alpha: f64, index: u64) -> Result<StoppingPlan> {
    let trivial = index == r + 1;
    let estimates = recall_estimates(index.min(r), r, alpha)?;
    Ok(StoppingPlan {
        sample_size: r,
        recall_goal: t,
        confidence: 1.0 - alpha,
        index,
        trivial,
        estimates,
    })
}

/// The QBCB order statistic index alone, without recall estimates.
pub fn qbcb_stop_index(r: u64, t: impl Into<RecallLevel>, alpha: f64) -> Result<u64> {
    let t = t.into();
    check_goal(t)?;
    Probability::open(alpha)?;
    if r == 0 {
        return Err(Error::domain("sample size must be at least 1"));
    }
    Ok(first_reaching(&binomial_mass(r, t.value()), 1.0 - alpha))
}

/// QBCB plan under the binomial approximation.
pub fn qbcb_index(r: u64, t: impl Into<RecallLevel>, alpha: f64) -> Result<StoppingPlan> {
    let t = t.into();
    let index = qbcb_stop_index(r, t, alpha)?;
    plan(r, t, alpha, index)
}

/// QBCB plan using the exact hypergeometric distribution of sampled
/// positives below the quantile position, for a positive subpopulation of
/// known size `R`. For `t > 1/2` the index never exceeds [`qbcb_index`]'s.
pub fn qbcb_index_exact(
    positives: u64,
    r: u64,
    t: impl Into<RecallLevel>,
    alpha: f64,
) -> Result<StoppingPlan> {
    let t = t.into();
    let index = qbcb_stop_index_exact(positives, r, t, alpha)?;
    plan(r, t, alpha, index)
}

/// The index of [`qbcb_index_exact`] alone.
pub fn qbcb_stop_index_exact(
    positives: u64,
    r: u64,
    t: impl Into<RecallLevel>,
    alpha: f64,
) -> Result<u64> {
    let t = t.into();
    check_goal(t)?;
    Probability::open(alpha)?;
    if r == 0 || r > positives {
        return Err(Error::domain(format!(
            "sample size {r} must lie in 1..={positives}"
        )));
    }
    let marked = below_quantile_count(positives, t);
    Ok(first_reaching(
        &hypergeometric_mass(positives, marked, r),
        1.0 - alpha,
    ))
}

/// Bisection for the root of a monotone function on `[0, 1]`; `rising`
/// tells which way `f` moves as its argument grows.
fn bisect(target: f64, rising: bool, f: impl Fn(f64) -> f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        if hi - lo <= BISECTION_TOLERANCE {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if (f(mid) < target) == rising {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn check_bound_args(j: u64, r: u64, alpha: f64) -> Result<()> {
    Probability::open(alpha)?;
    if r == 0 || j > r {
        return Err(Error::domain(format!(
            "need 0 <= j <= r and r >= 1, got j={j}, r={r}"
        )));
    }
    Ok(())
}

/// One-sided Clopper-Pearson lower bound for a success rate after `j`
/// successes in `r` trials.
pub fn cp_lower_bound(j: u64, r: u64, alpha: f64) -> Result<f64> {
    check_bound_args(j, r, alpha)?;
    if j == 0 {
        return Ok(0.0);
    }
    Ok(bisect(alpha, true, |t| {
        binomial_cdf_at_least(r, j, t).unwrap()
    }))
}

/// One-sided Clopper-Pearson upper bound.
pub fn cp_upper_bound(j: u64, r: u64, alpha: f64) -> Result<f64> {
    check_bound_args(j, r, alpha)?;
    if j == r {
        return Ok(1.0);
    }
    Ok(bisect(alpha, false, |t| {
        binomial_cdf_below(r, j + 1, t).unwrap()
    }))
}

pub fn recall_estimates(j: u64, r: u64, alpha: f64) -> Result<RecallEstimates> {
    if j == 0 {
        return Err(Error::domain("recall estimates need j >= 1"));
    }
    Ok(RecallEstimates {
        lcb: cp_lower_bound(j, r, alpha)?,
        plugin: j as f64 / r as f64,
        ucb: cp_upper_bound(j, r, alpha)?,
        confidence: 1.0 - alpha,
    })
}

/// Smallest sample size with a non-trivial QBCB plan.
pub fn min_sample_nontrivial(t: impl Into<RecallLevel>, alpha: f64) -> Result<u64> {
    let t = t.into();
    check_goal(t)?;
    Probability::open(alpha)?;
    // A plan is non-trivial iff 1 - t^r >= 1 - alpha, so every r a couple
    // below ln(alpha) / ln(t) is trivial and can be skipped.
    let start = ((alpha.ln() / t.value().ln()).floor() - 2.0).max(1.0) as u64;
    for r in start..=MAX_PLANNED_SAMPLE {
        if qbcb_stop_index(r, t, alpha)? <= r {
            return Ok(r);
        }
    }
    Err(Error::domain(format!(
        "no non-trivial plan with r <= {MAX_PLANNED_SAMPLE}"
    )))
}

/// Smallest sample size whose QBCB stopping point carries a one-sided upper
/// confidence bound on recall of at most `ceiling`. The bound is not
/// monotone in `r`, so this scans upward from [`min_sample_nontrivial`].
pub fn min_sample_for_ucb_at_most(
    ceiling: f64,
    t: impl Into<RecallLevel>,
    alpha: f64,
) -> Result<u64> {
    let t = t.into();
    if ceiling <= t.value() || ceiling > 1.0 {
        return Err(Error::domain(format!(
            "ceiling {ceiling} must lie in (t, 1] for t = {t}"
        )));
    }
    for r in min_sample_nontrivial(t, alpha)?..=MAX_PLANNED_SAMPLE {
        let j = qbcb_stop_index(r, t, alpha)?;
        // The upper bound is never below the plug-in estimate j / r.
        if j > r || j as f64 / r as f64 > ceiling {
            continue;
        }
        if cp_upper_bound(j, r, alpha)? <= ceiling {
            return Ok(r);
        }
    }
    Err(Error::domain(format!(
        "no sample size up to {MAX_PLANNED_SAMPLE} reaches ceiling {ceiling}"
    )))
}

/// One sample size per ceiling, in the order given.
pub fn ceiling_sweep(
    ceilings: &[f64],
    t: impl Into<RecallLevel>,
    alpha: f64,
) -> Result<Vec<(f64, u64)>> {
    let t = t.into();
    ceilings
        .iter()
        .map(|&c| Ok((c, min_sample_for_ucb_at_most(c, t, alpha)?)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub r: u64,
    pub j: u64,
    /// Row shows `j* = j - 1`: the fallback for a trivial plan, or a relaxed
    /// plan requested explicitly.
    pub starred: bool,
    pub estimates: RecallEstimates,
}

/// Stopping-point table. Trivial plans are shown as their fallback
/// `j* = r`; sizes listed in `relaxed` also get a `j* = j - 1` row ahead of
/// the QBCB row.
pub fn table_rows(
    t: impl Into<RecallLevel>,
    alpha: f64,
    sizes: &[u64],
    relaxed: &[u64],
) -> Result<Vec<TableRow>> {
    let t = t.into();
    let mut rows = Vec::with_capacity(sizes.len());
    for &r in sizes {
        let plan = qbcb_index(r, t, alpha)?;
        if plan.trivial {
            rows.push(TableRow {
                r,
                j: r,
                starred: true,
                estimates: plan.estimates,
            });
            continue;
        }
        if relaxed.contains(&r) && plan.index > 1 {
            rows.push(TableRow {
                r,
                j: plan.index - 1,
                starred: true,
                estimates: recall_estimates(plan.index - 1, r, alpha)?,
            });
        }
        rows.push(TableRow {
            r,
            j: plan.index,
            starred: false,
            estimates: plan.estimates,
        });
    }
    Ok(rows)
}

/// Recall goal certified by the Target rule (stop after finding all `r`
/// target documents): `alpha^(1/r)`, the largest `t` with a non-trivial
/// `j = r` plan.
pub fn target_rule_implied_goal(r: u64, alpha: f64) -> Result<f64> {
    Probability::open(alpha)?;
    if r == 0 {
        return Err(Error::domain("target set must be non-empty"));
    }
    Ok(alpha.powf(1.0 / r as f64))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn qbcb_examples() {
        let p = qbcb_index(14, 0.8, 0.05).unwrap();
        assert_eq!((p.index, p.trivial), (14, false));
        let p = qbcb_index(13, 0.8, 0.05).unwrap();
        assert_eq!((p.index, p.trivial), (14, true));
        assert_eq!(qbcb_index(50, 0.8, 0.05).unwrap().index, 45);
        assert_eq!(qbcb_index(457, 0.8, 0.05).unwrap().index, 380);
        assert!(qbcb_index(0, 0.8, 0.05).is_err());
        assert!(qbcb_index(10, 1.0, 0.05).is_err());
        assert!(qbcb_index(10, 0.8, 0.0).is_err());
    }

    #[test]
    fn exact_index_examples() {
        assert_eq!(
            qbcb_index_exact(1_000_000, 50, 0.8, 0.05).unwrap().index,
            45
        );
        assert!(qbcb_index_exact(60, 50, 0.8, 0.05).unwrap().index <= 45);
        assert!(qbcb_index_exact(40, 50, 0.8, 0.05).is_err());
        // A census: the minimal j is the quantile position itself.
        for big_r in 1..=12u64 {
            for t in ["0.5", "0.8", "0.9"] {
                let t: RecallLevel = t.parse().unwrap();
                let p = qbcb_index_exact(big_r, big_r, t, 0.05).unwrap();
                assert_eq!(p.index, t.ceil_mul(big_r), "R={big_r} t={t}");
            }
        }
    }

    #[test]
    fn clopper_pearson_examples() {
        let lcb = cp_lower_bound(14, 14, 0.05).unwrap();
        assert!(close(lcb, 0.05f64.powf(1.0 / 14.0), 1e-9));
        assert!(close(lcb, 0.807, 5e-4));
        assert!(close(cp_lower_bound(21, 22, 0.05).unwrap(), 0.802, 5e-4));
        assert_eq!(cp_lower_bound(0, 10, 0.05).unwrap(), 0.0);

        let ucb = cp_upper_bound(21, 22, 0.05).unwrap();
        assert!(close(ucb, 0.95f64.powf(1.0 / 22.0), 1e-9));
        assert_eq!(cp_upper_bound(14, 14, 0.05).unwrap(), 1.0);
        assert!(close(cp_upper_bound(45, 50, 0.05).unwrap(), 0.960, 5e-4));
        assert!(cp_upper_bound(11, 10, 0.05).is_err());
    }

    #[test]
    fn bisection_residuals() {
        for r in [1u64, 5, 14, 50, 129, 457, 2000] {
            for j in [1, r / 3, r / 2, (9 * r) / 10, r]
                .into_iter()
                .filter(|&j| j >= 1)
            {
                for alpha in [0.01, 0.05, 0.1] {
                    let lcb = cp_lower_bound(j, r, alpha).unwrap();
                    let tail = binomial_cdf_at_least(r, j, lcb).unwrap();
                    assert!(close(tail, alpha, 1e-7), "lcb r={r} j={j}: {tail}");
                    if j < r {
                        let ucb = cp_upper_bound(j, r, alpha).unwrap();
                        let tail = binomial_cdf_below(r, j + 1, ucb).unwrap();
                        assert!(close(tail, alpha, 1e-7), "ucb r={r} j={j}: {tail}");
                    }
                }
            }
        }
    }

    #[test]
    fn bounds_increase_with_successes() {
        for r in [3u64, 20, 137] {
            for j in 0..r {
                assert!(
                    cp_lower_bound(j, r, 0.05).unwrap() < cp_lower_bound(j + 1, r, 0.05).unwrap()
                );
                assert!(
                    cp_upper_bound(j, r, 0.05).unwrap() < cp_upper_bound(j + 1, r, 0.05).unwrap()
                );
            }
        }
    }

    #[test]
    fn estimates_examples() {
        let e = recall_estimates(45, 50, 0.05).unwrap();
        assert!(
            close(e.lcb, 0.801, 5e-4) && close(e.plugin, 0.9, 1e-15) && close(e.ucb, 0.960, 5e-4)
        );
        let e = recall_estimates(111, 129, 0.05).unwrap();
        assert!(
            close(e.lcb, 0.800, 5e-4)
                && close(e.plugin, 111.0 / 129.0, 1e-15)
                && close(e.ucb, 0.908, 5e-4)
        );
        let e = recall_estimates(7, 7, 0.05).unwrap();
        assert_eq!((e.plugin, e.ucb), (1.0, 1.0));
        assert!(recall_estimates(0, 7, 0.05).is_err());
    }

    #[test]
    fn planner_examples() {
        assert_eq!(min_sample_nontrivial(0.8, 0.05).unwrap(), 14);
        assert_eq!(min_sample_nontrivial(0.7, 0.05).unwrap(), 9);
        assert_eq!(min_sample_nontrivial(0.5, 0.5).unwrap(), 1);
        assert_eq!(min_sample_for_ucb_at_most(0.90, 0.8, 0.05).unwrap(), 158);
        assert_eq!(min_sample_for_ucb_at_most(0.99, 0.8, 0.05).unwrap(), 30);
        assert_eq!(min_sample_for_ucb_at_most(0.86, 0.8, 0.05).unwrap(), 457);
        assert!(min_sample_for_ucb_at_most(0.79, 0.8, 0.05).is_err());
    }

    #[test]
    fn min_sample_scan_start_is_safe() {
        // Compare against a scan from r = 1.
        for t in [0.3, 0.5, 0.7, 0.8, 0.9, 0.95, 0.99] {
            for alpha in [0.01, 0.05, 0.1, 0.3] {
                let brute = (1..)
                    .find(|&r| !qbcb_index(r, t, alpha).unwrap().trivial)
                    .unwrap();
                assert_eq!(
                    min_sample_nontrivial(t, alpha).unwrap(),
                    brute,
                    "t={t} alpha={alpha}"
                );
            }
        }
    }

    #[test]
    fn table_examples() {
        let rows = table_rows(0.8, 0.05, &[14, 22, 50, 158, 457], &[]).unwrap();
        let js: Vec<u64> = rows.iter().map(|r| r.j).collect();
        assert_eq!(js, [14, 21, 45, 135, 380]);
        let rows = table_rows(0.8, 0.05, &[21], &[21]).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!((rows[0].j, rows[0].starred), (20, true));
        assert!(close(rows[0].estimates.lcb, 0.793, 5e-4));
        assert_eq!((rows[1].j, rows[1].starred), (21, false));
        let rows = table_rows(0.8, 0.05, &[8], &[]).unwrap();
        assert_eq!((rows[0].j, rows[0].starred), (8, true));
        assert!(close(rows[0].estimates.lcb, 0.688, 5e-4));
        assert!(table_rows(0.8, 0.05, &[], &[]).unwrap().is_empty());
    }

    #[test]
    fn target_rule_goal() {
        let g = target_rule_implied_goal(10, 0.05).unwrap();
        assert!(g > 0.7410 && g < 0.7412);
        assert!(target_rule_implied_goal(9, 0.05).unwrap() >= 0.70);
        assert_eq!(target_rule_implied_goal(1, 0.5).unwrap(), 0.5);
        // Just below the implied goal the j = r plan exists; just above it does not.
        for r in [5u64, 9, 10, 30] {
            let g = target_rule_implied_goal(r, 0.05).unwrap();
            assert_eq!(qbcb_index(r, g - 1e-9, 0.05).unwrap().index, r);
            assert!(qbcb_index(r, g + 1e-9, 0.05).unwrap().trivial);
        }
    }

    #[test]
    fn upper_bound_is_not_monotone_in_sample_size() {
        let at = |r| {
            let p = qbcb_index(r, 0.8, 0.05).unwrap();
            (p.index, p.estimates)
        };
        let (j29, e29) = at(29);
        let (j30, e30) = at(30);
        assert_eq!((j29, j30), (28, 28));
        assert!(e29.lcb > e30.lcb);
        assert!(e29.ucb > e30.ucb);
        // Over 23..=29 all three estimates climb.
        for r in 23..29 {
            let (_, a) = at(r);
            let (_, b) = at(r + 1);
            assert!(
                a.lcb < b.lcb && a.plugin < b.plugin && a.ucb < b.ucb,
                "r={r}"
            );
        }
    }
}
