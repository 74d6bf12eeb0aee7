//! Signed extended-range reals stored as `(sign, ln|x|)`.
//!
//! Weighted monomial integrals in this crate routinely leave the `f64`
//! range (a single `|z₁|^{2ℓ}` moment over a ball of radius `ℓ` is of order
//! `ℓ^{2ℓ}`), so every accumulated quantity is carried in log form and only
//! converted back to a plain float for display.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

/// Relative gap below which subtracting two magnitudes is flagged as
/// catastrophic cancellation.
pub const CANCELLATION_GAP: f64 = 1e-12;

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(from = "LogRealRepr", into = "LogRealRepr")]
pub struct LogReal {
    sign: i8,
    ln_abs: f64,
}

impl LogReal {
    pub const ZERO: LogReal = LogReal {
        sign: 0,
        ln_abs: f64::NEG_INFINITY,
    };
    pub const ONE: LogReal = LogReal {
        sign: 1,
        ln_abs: 0.0,
    };

    /// Builds a value from its sign and natural log magnitude.
    ///
    /// A log magnitude of `-inf` collapses to zero. Panics on NaN or `+inf`
    /// magnitudes, which have no representation.
    pub fn new(sign: i8, ln_abs: f64) -> Self {
        assert!(
            !ln_abs.is_nan() && ln_abs != f64::INFINITY,
            "LogReal magnitude must be finite, got {ln_abs}"
        );
        if sign == 0 || ln_abs == f64::NEG_INFINITY {
            return Self::ZERO;
        }
        Self {
            sign: sign.signum(),
            ln_abs,
        }
    }

    /// `e^l`.
    pub fn from_ln(l: f64) -> Self {
        Self::new(1, l)
    }

    pub fn from_f64(x: f64) -> Self {
        assert!(x.is_finite(), "LogReal::from_f64 needs a finite value, got {x}");
        if x == 0.0 {
            Self::ZERO
        } else {
            Self::new(if x > 0.0 { 1 } else { -1 }, x.abs().ln())
        }
    }

    pub fn sign(self) -> i8 {
        self.sign
    }

    /// Natural log of the magnitude; `-inf` for zero.
    pub fn ln_abs(self) -> f64 {
        self.ln_abs
    }

    pub fn log10_abs(self) -> f64 {
        self.ln_abs / std::f64::consts::LN_10
    }

    pub fn is_zero(self) -> bool {
        self.sign == 0
    }

    pub fn is_positive(self) -> bool {
        self.sign > 0
    }

    /// Converts to `f64`, saturating to `±inf` or `0` outside the range.
    pub fn to_f64(self) -> f64 {
        f64::from(self.sign) * self.ln_abs.exp()
    }

    /// `Some(x)` when the value is representable as a finite normal-range
    /// float.
    pub fn to_f64_checked(self) -> Option<f64> {
        let x = self.to_f64();
        (x.is_finite() && (x == 0.0) == self.is_zero()).then_some(x)
    }

    pub fn abs(self) -> Self {
        Self::new(self.sign.abs(), self.ln_abs)
    }

    /// `|x|^p`; the sign is dropped.
    pub fn abs_powf(self, p: f64) -> Self {
        if self.is_zero() {
            return if p == 0.0 { Self::ONE } else { Self::ZERO };
        }
        Self::from_ln(self.ln_abs * p)
    }

    pub fn sqrt(self) -> Self {
        assert!(self.sign >= 0, "sqrt of a negative LogReal");
        self.abs_powf(0.5)
    }

    pub fn recip(self) -> Self {
        assert!(!self.is_zero(), "reciprocal of zero");
        Self::new(self.sign, -self.ln_abs)
    }

    /// Sum together with a flag raised when the operands have opposite
    /// signs and magnitudes within [`CANCELLATION_GAP`] of each other.
    pub fn checked_add(self, other: Self) -> (Self, bool) {
        if self.is_zero() {
            return (other, false);
        }
        if other.is_zero() {
            return (self, false);
        }
        let (big, small) = if self.ln_abs >= other.ln_abs {
            (self, other)
        } else {
            (other, self)
        };
        let d = small.ln_abs - big.ln_abs;
        if big.sign == small.sign {
            (Self::new(big.sign, big.ln_abs + d.exp().ln_1p()), false)
        } else {
            let cancels = -d < CANCELLATION_GAP;
            if d == 0.0 {
                return (Self::ZERO, true);
            }
            // 1 - e^d for d < 0
            let rest = -d.exp_m1();
            (Self::new(big.sign, big.ln_abs + rest.ln()), cancels)
        }
    }

    /// Relative difference `|a - b| / max(|a|, |b|)`, evaluated in log space.
    pub fn rel_diff(self, other: Self) -> f64 {
        if self.is_zero() && other.is_zero() {
            return 0.0;
        }
        let scale = self.ln_abs.max(other.ln_abs);
        let diff = (self - other).ln_abs;
        (diff - scale).exp()
    }
}

impl PartialEq for LogReal {
    fn eq(&self, other: &Self) -> bool {
        self.sign == other.sign && (self.sign == 0 || self.ln_abs == other.ln_abs)
    }
}

impl PartialOrd for LogReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match self.sign.cmp(&other.sign) {
            Ordering::Equal => match self.sign {
                0 => Some(Ordering::Equal),
                1 => self.ln_abs.partial_cmp(&other.ln_abs),
                _ => other.ln_abs.partial_cmp(&self.ln_abs),
            },
            ord => Some(ord),
        }
    }
}

impl Add for LogReal {
    type Output = Self;

    fn add(self, rhs: Self) -> Self {
        self.checked_add(rhs).0
    }
}

impl Sub for LogReal {
    type Output = Self;

    fn sub(self, rhs: Self) -> Self {
        self.checked_add(-rhs).0
    }
}

impl Neg for LogReal {
    type Output = Self;

    fn neg(self) -> Self {
        Self {
            sign: -self.sign,
            ln_abs: self.ln_abs,
        }
    }
}

impl Mul for LogReal {
    type Output = Self;

    fn mul(self, rhs: Self) -> Self {
        if self.is_zero() || rhs.is_zero() {
            return Self::ZERO;
        }
        Self::new(self.sign * rhs.sign, self.ln_abs + rhs.ln_abs)
    }
}

impl Div for LogReal {
    type Output = Self;

    fn div(self, rhs: Self) -> Self {
        self * rhs.recip()
    }
}

impl std::iter::Sum for LogReal {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        let mut acc = SignedLogSum::default();
        for x in iter {
            acc.push(x);
        }
        acc.value().0
    }
}

impl fmt::Display for LogReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.to_f64_checked() {
            Some(x) => write!(f, "{x:e}"),
            None => {
                let l10 = self.log10_abs();
                let exp = l10.floor();
                let mant = 10f64.powf(l10 - exp) * f64::from(self.sign);
                write!(f, "{mant}e{exp}")
            }
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum LogRealRepr {
    Pair {
        sign: i8,
        log: Option<f64>,
        /// Readable copy when in double range; ignored on input.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        decimal: Option<f64>,
    },
    Plain(f64),
}

impl From<LogRealRepr> for LogReal {
    fn from(r: LogRealRepr) -> Self {
        match r {
            LogRealRepr::Pair { sign, log, .. } => match log {
                Some(l) if l.is_finite() => LogReal::new(sign, l),
                _ => LogReal::ZERO,
            },
            LogRealRepr::Plain(x) => LogReal::from_f64(x),
        }
    }
}

impl From<LogReal> for LogRealRepr {
    fn from(x: LogReal) -> Self {
        LogRealRepr::Pair {
            sign: x.sign,
            log: (!x.is_zero()).then_some(x.ln_abs),
            decimal: x.to_f64_checked(),
        }
    }
}

/// Compensated log-sum-exp accumulator for nonnegative terms given by their
/// natural logs.
#[derive(Clone, Copy, Debug)]
pub struct LogSum {
    max: f64,
    sum: f64,
    comp: f64,
}

impl Default for LogSum {
    fn default() -> Self {
        Self {
            max: f64::NEG_INFINITY,
            sum: 0.0,
            comp: 0.0,
        }
    }
}

impl LogSum {
    pub fn push_ln(&mut self, l: f64) {
        if l == f64::NEG_INFINITY {
            return;
        }
        debug_assert!(!l.is_nan());
        if l > self.max {
            let scale = (self.max - l).exp();
            self.sum *= scale;
            self.comp *= scale;
            self.max = l;
        }
        // Kahan step
        let y = (l - self.max).exp() - self.comp;
        let t = self.sum + y;
        self.comp = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn ln_value(&self) -> f64 {
        if self.sum <= 0.0 {
            f64::NEG_INFINITY
        } else {
            self.max + self.sum.ln()
        }
    }

    pub fn value(&self) -> LogReal {
        LogReal::from_ln(self.ln_value())
    }
}

/// Signed accumulator: positive and negative parts are summed separately and
/// combined once at the end, so the cancellation flag reflects the whole sum.
#[derive(Clone, Copy, Debug, Default)]
pub struct SignedLogSum {
    pos: LogSum,
    neg: LogSum,
}

impl SignedLogSum {
    pub fn push(&mut self, x: LogReal) {
        match x.sign() {
            1 => self.pos.push_ln(x.ln_abs()),
            -1 => self.neg.push_ln(x.ln_abs()),
            _ => {}
        }
    }

    pub fn value(&self) -> (LogReal, bool) {
        self.pos.value().checked_add(-self.neg.value())
    }

    /// Sum of absolute values.
    pub fn mass(&self) -> LogReal {
        self.pos.value() + self.neg.value()
    }
}

/// `ln(k!)` through the log-gamma function.
pub fn ln_factorial(k: u64) -> f64 {
    if k < 2 {
        0.0
    } else {
        statrs::function::gamma::ln_gamma(k as f64 + 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
    }

    #[test]
    fn zero_and_one() {
        assert!(LogReal::ZERO.is_zero());
        assert_eq!(LogReal::from_f64(1.0), LogReal::ONE);
        assert_eq!(LogReal::new(1, f64::NEG_INFINITY), LogReal::ZERO);
        assert_eq!((LogReal::ONE - LogReal::ONE).sign(), 0);
    }

    #[test]
    fn cancellation_is_flagged() {
        let a = LogReal::from_f64(1.0);
        let b = LogReal::from_f64(-(1.0 - 1e-14));
        let (s, flag) = a.checked_add(b);
        assert!(flag);
        assert!(close(s.to_f64(), 1e-14, 1e-2));
        let (_, flag) = a.checked_add(LogReal::from_f64(-0.5));
        assert!(!flag);
    }

    #[test]
    fn huge_magnitudes_stay_finite() {
        let big = LogReal::from_ln(2000.0);
        let sum = big + big;
        assert!(close(sum.ln_abs(), 2000.0 + 2f64.ln(), 1e-15));
        assert_eq!(big.to_f64(), f64::INFINITY);
        assert!(big.to_f64_checked().is_none());
        assert!((big / big).rel_diff(LogReal::ONE) < 1e-15);
    }

    #[test]
    fn ordering_respects_sign() {
        let xs = [-3.0, -0.5, 0.0, 1e-300, 2.0, 7.5];
        for w in xs.windows(2) {
            assert!(LogReal::from_f64(w[0]) < LogReal::from_f64(w[1]));
        }
    }

    #[test]
    fn serde_pair_and_plain() {
        let x = LogReal::from_ln(1234.5);
        let s = serde_json::to_string(&x).unwrap();
        let back: LogReal = serde_json::from_str(&s).unwrap();
        assert_eq!(back, x);
        let plain: LogReal = serde_json::from_str("0.5").unwrap();
        assert_eq!(plain, LogReal::from_f64(0.5));
        let z: LogReal = serde_json::from_str(&serde_json::to_string(&LogReal::ZERO).unwrap()).unwrap();
        assert!(z.is_zero());
    }

    #[test]
    fn log_sum_rescales() {
        let mut acc = LogSum::default();
        for l in [-5.0, 700.0, 710.0, 0.0] {
            acc.push_ln(l);
        }
        let expect = 710.0 + (1.0 + (-10f64).exp()).ln();
        assert!(close(acc.ln_value(), expect, 1e-15));
    }

    #[test]
    fn ln_factorial_small() {
        assert_eq!(ln_factorial(0), 0.0);
        assert!(close(ln_factorial(5), 120f64.ln(), 1e-14));
        assert!(close(ln_factorial(20), 2432902008176640000f64.ln(), 1e-14));
    }

    proptest! {
        #[test]
        fn arithmetic_matches_f64(a in -1e6f64..1e6, b in -1e6f64..1e6) {
            let (la, lb) = (LogReal::from_f64(a), LogReal::from_f64(b));
            let sum = (la + lb).to_f64();
            prop_assert!((sum - (a + b)).abs() <= 1e-12 * (a.abs() + b.abs()) + 1e-300);
            prop_assert!(close((la * lb).to_f64(), a * b, 1e-12));
            if b != 0.0 {
                prop_assert!(close((la / lb).to_f64(), a / b, 1e-12));
            }
            prop_assert_eq!(la < lb, a < b);
        }

        #[test]
        fn signed_sum_matches_naive(xs in proptest::collection::vec(-1e3f64..1e3, 1..40)) {
            let mut acc = SignedLogSum::default();
            for &x in &xs {
                acc.push(LogReal::from_f64(x));
            }
            let naive: f64 = xs.iter().sum();
            let mass: f64 = xs.iter().map(|x| x.abs()).sum();
            prop_assert!((acc.value().0.to_f64() - naive).abs() <= 1e-12 * mass + 1e-300);
            prop_assert!(close(acc.mass().to_f64(), mass, 1e-12));
        }
    }
}
