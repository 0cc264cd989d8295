//! Extended-real log values: finite reals plus `+inf`.
//!
//! `log E[e^{hY}]` is always well defined in `(-inf, +inf]`, so every MGF
//! evaluation in the crate goes through [`ExtendedLogValue`]. `+inf` is
//! absorbing under addition and no operation ever produces NaN.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign};

use serde::{Serialize, Serializer};

/// A log-expectation: either a finite real or `+inf`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtendedLogValue(f64);

impl ExtendedLogValue {
    pub const ZERO: Self = Self(0.0);
    pub const INFINITY: Self = Self(f64::INFINITY);

    /// Wraps a raw `f64`. NaN (an indeterminate form) and `-inf` are rejected.
    pub fn new(value: f64) -> Option<Self> {
        if value.is_nan() || value == f64::NEG_INFINITY {
            None
        } else {
            Some(Self(value))
        }
    }

    /// Wraps a finite value.
    ///
    /// Panics if `value` is not finite; use [`ExtendedLogValue::new`] for
    /// untrusted inputs.
    pub fn finite(value: f64) -> Self {
        assert!(value.is_finite(), "non-finite log value {value}");
        Self(value)
    }

    /// Maps a computed f64 onto the extended line: NaN and `+inf` both mean the
    /// expectation diverged. `-inf` cannot come from a positive expectation and
    /// is treated as an overflow of a very negative exponent.
    pub(crate) fn from_computed(value: f64) -> Self {
        if value.is_nan() || value == f64::INFINITY {
            Self::INFINITY
        } else if value == f64::NEG_INFINITY {
            Self(f64::MIN)
        } else {
            Self(value)
        }
    }

    pub fn is_finite(self) -> bool {
        self.0.is_finite()
    }

    pub fn is_infinite(self) -> bool {
        !self.0.is_finite()
    }

    /// The raw value (`f64::INFINITY` for `+inf`).
    pub fn value(self) -> f64 {
        self.0
    }

    /// `Some(x)` for finite values.
    pub fn to_finite(self) -> Option<f64> {
        self.is_finite().then_some(self.0)
    }

    /// `exp(self)` in linear space; `+inf` maps to `+inf`.
    pub fn exp(self) -> f64 {
        self.0.exp()
    }

    pub fn max(self, other: Self) -> Self {
        if other.0 > self.0 {
            other
        } else {
            self
        }
    }

    /// Adds a finite real, keeping `+inf` absorbing.
    pub fn add_real(self, x: f64) -> Self {
        if self.is_infinite() {
            self
        } else {
            Self::from_computed(self.0 + x)
        }
    }
}

impl Default for ExtendedLogValue {
    fn default() -> Self {
        Self::ZERO
    }
}

impl Add for ExtendedLogValue {
    type Output = Self;

    fn add(self, rhs: Self) -> Self {
        if self.is_infinite() || rhs.is_infinite() {
            Self::INFINITY
        } else {
            Self::from_computed(self.0 + rhs.0)
        }
    }
}

impl AddAssign for ExtendedLogValue {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl PartialOrd for ExtendedLogValue {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.0.total_cmp(&other.0))
    }
}

impl fmt::Display for ExtendedLogValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_infinite() {
            f.write_str("+inf")
        } else {
            fmt::Display::fmt(&self.0, f)
        }
    }
}

impl Serialize for ExtendedLogValue {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        if self.is_infinite() {
            serializer.serialize_str("+inf")
        } else {
            serializer.serialize_f64(self.0)
        }
    }
}

/// `log(sum exp(x_i))` over terms that may be `+inf`. An empty input gives
/// `None` (the log of zero).
pub fn log_sum_exp<I>(terms: I) -> Option<ExtendedLogValue>
where
    I: IntoIterator<Item = ExtendedLogValue>,
{
    let terms: Vec<f64> = terms.into_iter().map(|t| t.value()).collect();
    log_sum_exp_f64(&terms).map(ExtendedLogValue::from_computed)
}

/// `log(sum exp(x_i))` for raw values; `-inf` entries contribute zero.
pub(crate) fn log_sum_exp_f64(terms: &[f64]) -> Option<f64> {
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return None;
    }
    if max == f64::INFINITY {
        return Some(f64::INFINITY);
    }
    let sum: f64 = terms.iter().map(|&t| (t - max).exp()).sum();
    Some(max + sum.ln())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn infinity_absorbs() {
        let x = ExtendedLogValue::finite(-3.0);
        assert!((x + ExtendedLogValue::INFINITY).is_infinite());
        assert!(ExtendedLogValue::INFINITY.add_real(-1e300).is_infinite());
    }

    #[test]
    fn rejects_nan_and_negative_infinity() {
        assert!(ExtendedLogValue::new(f64::NAN).is_none());
        assert!(ExtendedLogValue::new(f64::NEG_INFINITY).is_none());
        assert!(ExtendedLogValue::from_computed(f64::NAN).is_infinite());
    }

    #[test]
    fn log_sum_exp_matches_direct() {
        let v = [0.1, -2.0, 3.5].map(ExtendedLogValue::finite);
        let direct = (0.1f64.exp() + (-2.0f64).exp() + 3.5f64.exp()).ln();
        let got = log_sum_exp(v).unwrap().value();
        assert!((got - direct).abs() < 1e-14);
        // far below linear-space underflow
        let tiny = [-1000.0, -1000.0].map(ExtendedLogValue::finite);
        let got = log_sum_exp(tiny).unwrap().value();
        assert!((got - (-1000.0 + 2f64.ln())).abs() < 1e-12);
        assert!(log_sum_exp(std::iter::empty()).is_none());
    }

    #[test]
    fn serializes_infinity_as_string() {
        let s = serde_json::to_string(&ExtendedLogValue::INFINITY).unwrap();
        assert_eq!(s, "\"+inf\"");
    }
}
