//! Nonnegative reals carried as their natural logarithm.
//!
//! Iterated Young functions reach values like `exp((θ+j)^m)`, far outside the
//! range of `f64`; every Orlicz quantity in this crate flows through [`LogVal`].

use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::fmt;
use std::ops::{Div, Mul};

#[derive(Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogVal {
    log_value: f64,
    is_zero: bool,
}

impl LogVal {
    pub const ZERO: LogVal = LogVal { log_value: f64::NEG_INFINITY, is_zero: true };
    pub const ONE: LogVal = LogVal { log_value: 0.0, is_zero: false };

    /// The number `exp(l)`; `l = -inf` maps to zero.
    pub fn from_ln(l: f64) -> LogVal {
        assert!(!l.is_nan(), "LogVal::from_ln(NaN)");
        if l == f64::NEG_INFINITY {
            LogVal::ZERO
        } else {
            LogVal { log_value: l, is_zero: false }
        }
    }

    pub fn new(x: f64) -> LogVal {
        assert!(x >= 0.0, "LogVal::new of negative or NaN value {x}");
        if x == 0.0 {
            LogVal::ZERO
        } else {
            LogVal { log_value: x.ln(), is_zero: false }
        }
    }

    /// Natural log of the value (`-inf` for zero).
    pub fn ln(self) -> f64 {
        if self.is_zero {
            f64::NEG_INFINITY
        } else {
            self.log_value
        }
    }

    pub fn is_zero(self) -> bool {
        self.is_zero
    }

    /// Plain value; saturates to `inf` / `0` outside the `f64` range.
    pub fn value(self) -> f64 {
        if self.is_zero {
            0.0
        } else {
            self.log_value.exp()
        }
    }

    pub fn powf(self, p: f64) -> LogVal {
        if self.is_zero {
            return if p == 0.0 { LogVal::ONE } else { LogVal::ZERO };
        }
        LogVal::from_ln(self.log_value * p)
    }

    pub fn sqrt(self) -> LogVal {
        self.powf(0.5)
    }

    pub fn scale(self, c: f64) -> LogVal {
        self * LogVal::new(c)
    }

    /// Stable log-sum-exp addition.
    pub fn add(self, other: LogVal) -> LogVal {
        if self.is_zero {
            return other;
        }
        if other.is_zero {
            return self;
        }
        let (hi, lo) = if self.log_value >= other.log_value {
            (self.log_value, other.log_value)
        } else {
            (other.log_value, self.log_value)
        };
        LogVal::from_ln(hi + (lo - hi).exp().ln_1p())
    }

    /// `max(self - other, 0)`.
    pub fn sub_saturating(self, other: LogVal) -> LogVal {
        if other.is_zero {
            return self;
        }
        if self.is_zero || self.log_value <= other.log_value {
            return LogVal::ZERO;
        }
        let d = other.log_value - self.log_value;
        LogVal::from_ln(self.log_value + (-d.exp()).ln_1p())
    }

    pub fn max(self, other: LogVal) -> LogVal {
        if self >= other {
            self
        } else {
            other
        }
    }

    pub fn min(self, other: LogVal) -> LogVal {
        if self <= other {
            self
        } else {
            other
        }
    }

    /// `Σ w_i x_i` for nonnegative weights, accumulated in the log domain.
    pub fn weighted_sum<I>(terms: I) -> LogVal
    where
        I: IntoIterator<Item = (f64, LogVal)>,
    {
        let terms: Vec<f64> = terms
            .into_iter()
            .filter(|(w, x)| *w > 0.0 && !x.is_zero())
            .map(|(w, x)| w.ln() + x.ln())
            .collect();
        LogVal::from_ln(log_sum_exp(&terms))
    }
}

/// `ln Σ exp(a_i)`, `-inf` for an empty slice.
pub fn log_sum_exp(a: &[f64]) -> f64 {
    let hi = a.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi == f64::NEG_INFINITY || hi == f64::INFINITY {
        return hi;
    }
    hi + a.iter().map(|x| (x - hi).exp()).sum::<f64>().ln()
}

impl PartialOrd for LogVal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.ln().partial_cmp(&other.ln())
    }
}

impl Mul for LogVal {
    type Output = LogVal;
    fn mul(self, rhs: LogVal) -> LogVal {
        if self.is_zero || rhs.is_zero {
            LogVal::ZERO
        } else {
            LogVal::from_ln(self.log_value + rhs.log_value)
        }
    }
}

impl Div for LogVal {
    type Output = LogVal;
    fn div(self, rhs: LogVal) -> LogVal {
        assert!(!rhs.is_zero, "LogVal division by zero");
        if self.is_zero {
            LogVal::ZERO
        } else {
            LogVal::from_ln(self.log_value - rhs.log_value)
        }
    }
}

impl fmt::Debug for LogVal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero {
            write!(f, "LogVal(0)")
        } else {
            write!(f, "LogVal(e^{})", self.log_value)
        }
    }
}

impl fmt::Display for LogVal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_and_one() {
        assert!(LogVal::new(0.0).is_zero());
        assert_eq!(LogVal::new(1.0).ln(), 0.0);
        assert_eq!((LogVal::ZERO * LogVal::from_ln(800.0)).value(), 0.0);
        assert_eq!(LogVal::ZERO.powf(0.0), LogVal::ONE);
    }

    #[test]
    fn huge_values_do_not_overflow() {
        let a = LogVal::from_ln(1e6);
        let b = LogVal::from_ln(1e6);
        assert!(((a.add(b)).ln() - (1e6 + 2f64.ln())).abs() < 1e-9);
        assert_eq!((a / b).ln(), 0.0);
    }

    #[test]
    fn subtraction_saturates() {
        let a = LogVal::new(5.0);
        let b = LogVal::new(3.0);
        assert!((a.sub_saturating(b).value() - 2.0).abs() < 1e-14);
        assert!(b.sub_saturating(a).is_zero());
    }

    #[test]
    fn lse_of_empty_is_neg_inf() {
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
        assert!(LogVal::weighted_sum(Vec::new()).is_zero());
    }

    proptest! {
        #[test]
        fn add_matches_plain_arithmetic(x in 1e-8f64..1e8, y in 1e-8f64..1e8) {
            let s = LogVal::new(x).add(LogVal::new(y)).value();
            prop_assert!((s - (x + y)).abs() <= 1e-12 * (x + y));
        }

        #[test]
        fn mul_and_pow_are_log_linear(lx in -500f64..500.0, ly in -500f64..500.0, p in -3f64..3.0) {
            let x = LogVal::from_ln(lx);
            let y = LogVal::from_ln(ly);
            prop_assert!(((x * y).ln() - (lx + ly)).abs() < 1e-9);
            prop_assert!((x.powf(p).ln() - lx * p).abs() < 1e-9);
        }

        #[test]
        fn ordering_matches_values(x in 0f64..1e6, y in 0f64..1e6) {
            prop_assert_eq!(LogVal::new(x) < LogVal::new(y), x < y);
        }
    }
}
