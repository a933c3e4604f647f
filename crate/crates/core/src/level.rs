//! Recall goals and quantile levels.
//!
//! Several stopping indices depend discontinuously on whether a product such
//! as `(r - 1) * t` is an integer. A [`RecallLevel`] therefore remembers the
//! exact ratio it was built from when one is available (integer ratios and
//! decimal strings), and falls back to a `1e-9` integrality tolerance for
//! levels constructed from a bare `f64`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance used to snap `n * t` to an integer when no exact ratio is known.
pub const INTEGRALITY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecallLevel {
    value: f64,
    ratio: Option<(u64, u64)>,
}

/// Integer and fractional parts of `n * t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scaled {
    pub whole: u64,
    pub fraction: f64,
}

impl Scaled {
    pub fn is_integer(&self) -> bool {
        self.fraction == 0.0
    }

    pub fn ceil(&self) -> u64 {
        if self.is_integer() {
            self.whole
        } else {
            self.whole + 1
        }
    }
}

impl RecallLevel {
    /// Level in `[0, 1]` given as a real number.
    pub fn new(value: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&value) || value.is_nan() {
            return Err(Error::domain(format!("level {value} is outside [0, 1]")));
        }
        Ok(Self { value, ratio: None })
    }

    /// Exact level `num / den`.
    pub fn from_ratio(num: u64, den: u64) -> Result<Self> {
        if den == 0 || num > den {
            return Err(Error::domain(format!("ratio {num}/{den} is not in [0, 1]")));
        }
        let g = gcd(num, den);
        let (num, den) = (num / g, den / g);
        Ok(Self {
            value: num as f64 / den as f64,
            ratio: Some((num, den)),
        })
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn ratio(&self) -> Option<(u64, u64)> {
        self.ratio
    }

    pub fn is_exact(&self) -> bool {
        self.ratio.is_some()
    }

    /// Strictly inside `(0, 1)`.
    pub fn is_interior(&self) -> bool {
        self.value > 0.0 && self.value < 1.0
    }

    /// Splits `n * t` into whole and fractional parts.
    pub fn scale(&self, n: u64) -> Scaled {
        match self.ratio {
            Some((num, den)) => {
                let prod = n as u128 * num as u128;
                let den = den as u128;
                Scaled {
                    whole: (prod / den) as u64,
                    fraction: (prod % den) as f64 / den as f64,
                }
            }
            None => {
                let x = n as f64 * self.value;
                let nearest = x.round();
                if (x - nearest).abs() <= INTEGRALITY_TOLERANCE * nearest.max(1.0) {
                    Scaled {
                        whole: nearest as u64,
                        fraction: 0.0,
                    }
                } else {
                    let whole = x.floor();
                    Scaled {
                        whole: whole as u64,
                        fraction: x - whole,
                    }
                }
            }
        }
    }

    /// `ceil(n * t)`.
    pub fn ceil_mul(&self, n: u64) -> u64 {
        self.scale(n).ceil()
    }

    /// `ceil(t * a / b)` for `b > 0`.
    pub fn ceil_mul_ratio(&self, a: u64, b: u64) -> u64 {
        assert!(b > 0, "zero denominator");
        match self.ratio {
            Some((num, den)) => {
                let top = a as u128 * num as u128;
                let bottom = b as u128 * den as u128;
                top.div_ceil(bottom) as u64
            }
            None => {
                let x = self.value * a as f64 / b as f64;
                let nearest = x.round();
                if (x - nearest).abs() <= INTEGRALITY_TOLERANCE * nearest.max(1.0) {
                    nearest as u64
                } else {
                    x.ceil() as u64
                }
            }
        }
    }
}

impl From<f64> for RecallLevel {
    /// Panics if `value` is outside `[0, 1]`; use [`RecallLevel::new`] for
    /// fallible construction.
    fn from(value: f64) -> Self {
        RecallLevel::new(value).expect("recall level must lie in [0, 1]")
    }
}

impl FromStr for RecallLevel {
    type Err = Error;

    /// Parses a decimal (`0.8`, `.75`, `1`) or a ratio (`4/5`) exactly.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::domain(format!("cannot parse recall level {s:?}"));
        if let Some((n, d)) = s.split_once('/') {
            let n: u64 = n.trim().parse().map_err(|_| bad())?;
            let d: u64 = d.trim().parse().map_err(|_| bad())?;
            return RecallLevel::from_ratio(n, d);
        }
        let (int_part, frac_part) = s.split_once('.').unwrap_or((s, ""));
        let digits_ok = |p: &str| p.chars().all(|c| c.is_ascii_digit());
        if (int_part.is_empty() && frac_part.is_empty())
            || !digits_ok(int_part)
            || !digits_ok(frac_part)
            || frac_part.len() > 18
        {
            return Err(bad());
        }
        let den = 10u64.pow(frac_part.len() as u32);
        let whole: u64 = if int_part.is_empty() {
            0
        } else {
            int_part.parse().map_err(|_| bad())?
        };
        let frac: u64 = if frac_part.is_empty() {
            0
        } else {
            frac_part.parse().map_err(|_| bad())?
        };
        let num = whole
            .checked_mul(den)
            .and_then(|w| w.checked_add(frac))
            .ok_or_else(bad)?;
        RecallLevel::from_ratio(num, den)
    }
}

impl fmt::Display for RecallLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a.max(1)
}
