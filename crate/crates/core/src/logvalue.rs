//! Signed log-magnitude scalars.
//!
//! Kernel values such as `E_k(x, λ)` grow like `e^{xλ}` and overflow `f64`
//! long before the Monte Carlo horizons of interest, so every kernel and
//! density is carried as `sign · exp(log_abs)`.

use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogValue {
    sign: i8,
    log_abs: f64,
}

impl LogValue {
    pub const ZERO: LogValue = LogValue {
        sign: 0,
        log_abs: f64::NEG_INFINITY,
    };
    pub const ONE: LogValue = LogValue {
        sign: 1,
        log_abs: 0.0,
    };

    /// Builds a value from its parts. A sign of zero or a log of `-inf`
    /// both collapse to [`LogValue::ZERO`].
    pub fn new(sign: i8, log_abs: f64) -> Self {
        if sign == 0 || log_abs == f64::NEG_INFINITY {
            Self::ZERO
        } else {
            Self {
                sign: sign.signum(),
                log_abs,
            }
        }
    }

    /// Positive value `exp(log_abs)`.
    pub fn from_log(log_abs: f64) -> Self {
        Self::new(1, log_abs)
    }

    pub fn from_f64(v: f64) -> Self {
        if v == 0.0 {
            Self::ZERO
        } else {
            Self::new(if v > 0.0 { 1 } else { -1 }, v.abs().ln())
        }
    }

    pub fn sign(&self) -> i8 {
        self.sign
    }

    pub fn log_abs(&self) -> f64 {
        self.log_abs
    }

    pub fn is_zero(&self) -> bool {
        self.sign == 0
    }

    pub fn is_positive(&self) -> bool {
        self.sign > 0
    }

    /// Natural log of a positive value; `-inf` for zero, NaN for negative.
    pub fn ln(&self) -> f64 {
        match self.sign {
            1 => self.log_abs,
            0 => f64::NEG_INFINITY,
            _ => f64::NAN,
        }
    }

    /// Linear value; may be `±inf` or `0` when not representable.
    pub fn to_f64(&self) -> f64 {
        f64::from(self.sign) * self.log_abs.exp()
    }

    /// Linear value when representable as a finite, normal-range `f64`.
    pub fn to_f64_checked(&self) -> Option<f64> {
        if self.sign == 0 {
            return Some(0.0);
        }
        let v = self.to_f64();
        (v.is_finite() && v != 0.0).then_some(v)
    }

    pub fn abs(&self) -> Self {
        Self::new(self.sign.abs(), self.log_abs)
    }

    pub fn powf(&self, p: f64) -> Self {
        assert!(self.sign >= 0, "powf of a negative LogValue");
        if self.sign == 0 {
            return if p == 0.0 { Self::ONE } else { Self::ZERO };
        }
        Self::from_log(self.log_abs * p)
    }

    pub fn recip(&self) -> Self {
        Self::new(self.sign, -self.log_abs)
    }

    /// Sum of many values via a single shift by the largest magnitude.
    pub fn sum<I: IntoIterator<Item = LogValue>>(items: I) -> Self {
        let items: Vec<LogValue> = items.into_iter().filter(|v| !v.is_zero()).collect();
        let Some(max) = items
            .iter()
            .map(|v| v.log_abs)
            .max_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal))
        else {
            return Self::ZERO;
        };
        if max == f64::INFINITY {
            let s: i8 = items
                .iter()
                .filter(|v| v.log_abs == f64::INFINITY)
                .map(|v| v.sign)
                .sum();
            return Self::new(s.signum(), f64::INFINITY);
        }
        let acc: f64 = items
            .iter()
            .map(|v| f64::from(v.sign) * (v.log_abs - max).exp())
            .sum();
        Self::from_f64(acc).scale_log(max)
    }

    fn scale_log(self, shift: f64) -> Self {
        Self::new(self.sign, self.log_abs + shift)
    }

    /// Relative difference `|a - b| / max(|a|, |b|)`, computed in log scale.
    pub fn rel_diff(&self, other: &LogValue) -> f64 {
        if self.is_zero() && other.is_zero() {
            return 0.0;
        }
        if self.sign != other.sign {
            return if self.is_zero() || other.is_zero() {
                1.0
            } else {
                2.0
            };
        }
        let d = self.log_abs - other.log_abs;
        (-(d.abs())).exp_m1().abs()
    }
}

impl Mul for LogValue {
    type Output = LogValue;
    fn mul(self, rhs: LogValue) -> LogValue {
        LogValue::new(self.sign * rhs.sign, self.log_abs + rhs.log_abs)
    }
}

impl Div for LogValue {
    type Output = LogValue;
    fn div(self, rhs: LogValue) -> LogValue {
        assert!(!rhs.is_zero(), "division by a zero LogValue");
        LogValue::new(self.sign * rhs.sign, self.log_abs - rhs.log_abs)
    }
}

impl Add for LogValue {
    type Output = LogValue;
    fn add(self, rhs: LogValue) -> LogValue {
        if self.is_zero() {
            return rhs;
        }
        if rhs.is_zero() {
            return self;
        }
        let (hi, lo) = if self.log_abs >= rhs.log_abs {
            (self, rhs)
        } else {
            (rhs, self)
        };
        if hi.log_abs == f64::INFINITY {
            return hi;
        }
        let r = (lo.log_abs - hi.log_abs).exp();
        if hi.sign == lo.sign {
            LogValue::new(hi.sign, hi.log_abs + r.ln_1p())
        } else if r == 1.0 {
            LogValue::ZERO
        } else {
            LogValue::new(hi.sign, hi.log_abs + (-r).ln_1p())
        }
    }
}

impl Sub for LogValue {
    type Output = LogValue;
    fn sub(self, rhs: LogValue) -> LogValue {
        self + (-rhs)
    }
}

impl Neg for LogValue {
    type Output = LogValue;
    fn neg(self) -> LogValue {
        LogValue::new(-self.sign, self.log_abs)
    }
}

impl fmt::Display for LogValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.sign {
            0 => write!(f, "0"),
            s => write!(f, "{}exp({})", if s < 0 { "-" } else { "" }, self.log_abs),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_and_one() {
        assert!(LogValue::from_f64(0.0).is_zero());
        assert_eq!(LogValue::from_f64(1.0), LogValue::ONE);
        assert_eq!((LogValue::ONE - LogValue::ONE), LogValue::ZERO);
        assert_eq!(LogValue::ZERO.ln(), f64::NEG_INFINITY);
    }

    #[test]
    fn huge_values_do_not_overflow() {
        let a = LogValue::from_log(1000.0);
        let b = LogValue::from_log(999.0);
        let s = a + b;
        assert!((s.ln() - (1000.0 + (-1.0f64).exp().ln_1p())).abs() < 1e-12);
        assert!(a.to_f64_checked().is_none());
    }

    #[test]
    fn sum_matches_pairwise() {
        let vals = [3.0, -1.5, 0.25, 7.0, -2.0];
        let s = LogValue::sum(vals.iter().map(|&v| LogValue::from_f64(v)));
        assert!((s.to_f64() - vals.iter().sum::<f64>()).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn arithmetic_matches_linear(a in -1e3f64..1e3, b in -1e3f64..1e3) {
            let (la, lb) = (LogValue::from_f64(a), LogValue::from_f64(b));
            let tol = 1e-12 * (a.abs() + b.abs() + 1.0);
            prop_assert!(((la + lb).to_f64() - (a + b)).abs() <= tol * 10.0);
            prop_assert!(((la * lb).to_f64() - a * b).abs() <= 1e-12 * (a * b).abs() + 1e-300);
            if b != 0.0 {
                prop_assert!(((la / lb).to_f64() - a / b).abs() <= 1e-12 * (a / b).abs());
            }
        }
    }
}
