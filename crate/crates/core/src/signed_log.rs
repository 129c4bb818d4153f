//! Real numbers stored as `(sign, ln|x|)`.
//!
//! Products of factorials, Vandermonde factors and determinants overflow `f64`
//! long before the quantities they combine into do. Keeping the logarithm of
//! the magnitude and the sign separately lets those products be formed exactly
//! (up to rounding of the logs) and exponentiated once at the end.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Clone, Copy, PartialEq)]
pub struct SignedLogValue {
    sign: i8,
    logmag: f64,
}

impl SignedLogValue {
    pub const ZERO: Self = Self {
        sign: 0,
        logmag: f64::NEG_INFINITY,
    };
    pub const ONE: Self = Self {
        sign: 1,
        logmag: 0.0,
    };

    /// Builds a value from an explicit sign and log-magnitude. A zero sign
    /// always yields [`SignedLogValue::ZERO`].
    pub fn new(sign: i8, logmag: f64) -> Self {
        if sign == 0 || logmag == f64::NEG_INFINITY {
            Self::ZERO
        } else {
            Self {
                sign: sign.signum(),
                logmag,
            }
        }
    }

    pub fn from_f64(x: f64) -> Self {
        if x == 0.0 {
            Self::ZERO
        } else {
            Self {
                sign: if x > 0.0 { 1 } else { -1 },
                logmag: x.abs().ln(),
            }
        }
    }

    /// `e^x` as a positive value, without evaluating the exponential.
    pub fn exp(x: f64) -> Self {
        Self { sign: 1, logmag: x }
    }

    pub fn sign(&self) -> i8 {
        self.sign
    }

    /// `ln|x|`; `-inf` for zero.
    pub fn logmag(&self) -> f64 {
        self.logmag
    }

    pub fn is_zero(&self) -> bool {
        self.sign == 0
    }

    pub fn to_f64(&self) -> f64 {
        match self.sign {
            0 => 0.0,
            s => f64::from(s) * self.logmag.exp(),
        }
    }

    pub fn abs(&self) -> Self {
        Self::new(self.sign.abs(), self.logmag)
    }

    pub fn powi(&self, n: i32) -> Self {
        if n == 0 {
            return Self::ONE;
        }
        if self.sign == 0 {
            return Self::ZERO;
        }
        let sign = if n % 2 == 0 { 1 } else { self.sign };
        Self::new(sign, self.logmag * f64::from(n))
    }

    pub fn recip(&self) -> Self {
        Self::ONE / *self
    }

    /// Relative difference `|a - b| / max(|a|, |b|)`, computed in log space.
    pub fn rel_diff(&self, other: &Self) -> f64 {
        let scale = self.logmag.max(other.logmag);
        if scale == f64::NEG_INFINITY {
            return 0.0;
        }
        let d = *self - *other;
        if d.is_zero() {
            0.0
        } else {
            (d.logmag - scale).exp()
        }
    }
}

impl Default for SignedLogValue {
    fn default() -> Self {
        Self::ZERO
    }
}

impl fmt::Debug for SignedLogValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SignedLogValue({}, ln|x|={})", self.sign, self.logmag)
    }
}

impl fmt::Display for SignedLogValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:e}", self.to_f64())
    }
}

impl From<f64> for SignedLogValue {
    fn from(x: f64) -> Self {
        Self::from_f64(x)
    }
}

impl Mul for SignedLogValue {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        Self::new(self.sign * rhs.sign, self.logmag + rhs.logmag)
    }
}

impl Div for SignedLogValue {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        assert!(rhs.sign != 0, "SignedLogValue division by zero");
        Self::new(self.sign * rhs.sign, self.logmag - rhs.logmag)
    }
}

impl Neg for SignedLogValue {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.sign, self.logmag)
    }
}

impl Add for SignedLogValue {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        if self.sign == 0 {
            return rhs;
        }
        if rhs.sign == 0 {
            return self;
        }
        let (hi, lo) = match self.logmag.partial_cmp(&rhs.logmag) {
            Some(Ordering::Less) => (rhs, self),
            _ => (self, rhs),
        };
        let ratio = (lo.logmag - hi.logmag).exp();
        if hi.sign == lo.sign {
            Self::new(hi.sign, hi.logmag + ratio.ln_1p())
        } else if ratio >= 1.0 {
            Self::ZERO
        } else {
            Self::new(hi.sign, hi.logmag + (-ratio).ln_1p())
        }
    }
}

impl Sub for SignedLogValue {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl std::iter::Sum for SignedLogValue {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::ZERO, |a, b| a + b)
    }
}

impl std::iter::Product for SignedLogValue {
    fn product<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::ONE, |a, b| a * b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn basic_arithmetic() {
        let a = SignedLogValue::from_f64(3.0);
        let b = SignedLogValue::from_f64(-2.0);
        assert!(((a * b).to_f64() + 6.0).abs() < 1e-14);
        assert!(((a / b).to_f64() + 1.5).abs() < 1e-14);
        assert!(((a + b).to_f64() - 1.0).abs() < 1e-14);
        assert!(((b - a).to_f64() + 5.0).abs() < 1e-14);
        assert!((a - a).is_zero());
        assert_eq!((a * SignedLogValue::ZERO).sign(), 0);
        assert!((b.powi(3).to_f64() + 8.0).abs() < 1e-13);
    }

    #[test]
    fn handles_magnitudes_beyond_f64() {
        let big = SignedLogValue::exp(1000.0);
        let small = SignedLogValue::exp(-1000.0);
        let one = big * small;
        assert!((one.to_f64() - 1.0).abs() < 1e-12);
        assert!(((big + big).logmag() - (1000.0 + 2f64.ln())).abs() < 1e-12);
    }

    fn magnitude() -> impl Strategy<Value = f64> {
        (-300.0f64..300.0, any::<bool>()).prop_map(|(e, neg)| {
            let v = 10f64.powf(e);
            if neg {
                -v
            } else {
                v
            }
        })
    }

    proptest! {
        #[test]
        fn multiplication_is_associative(a in magnitude(), b in magnitude(), c in magnitude()) {
            let (a, b, c) = (SignedLogValue::from(a), SignedLogValue::from(b), SignedLogValue::from(c));
            let l = (a * b) * c;
            let r = a * (b * c);
            prop_assert_eq!(l.sign(), r.sign());
            prop_assert!((l.logmag() - r.logmag()).abs() <= 1e-12 * l.logmag().abs().max(1.0));
        }

        #[test]
        fn roundtrips_through_f64(x in magnitude()) {
            let back = SignedLogValue::from(x).to_f64();
            prop_assert!(((back - x) / x).abs() < 1e-12);
        }

        #[test]
        fn addition_matches_f64(a in -1e6f64..1e6, b in -1e6f64..1e6) {
            let s = (SignedLogValue::from(a) + SignedLogValue::from(b)).to_f64();
            prop_assert!((s - (a + b)).abs() <= 1e-9 * (a.abs() + b.abs()).max(1e-300));
        }
    }
}
