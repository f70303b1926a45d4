//! Sign/phase plus log-magnitude numbers.
//!
//! Ground-state tails behave like `exp(-d/h)` and hopping coefficients like
//! `exp(-S/h)`; at small `h` these leave the `f64` range long before the
//! computations that use them become meaningless, so they are carried as
//! logarithms throughout.

use num_complex::Complex64;
use std::f64::consts::{LN_10, PI};
use std::fmt;
use std::ops::{Div, Mul, Neg};

/// Sign of a [`LogScalar`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    Negative,
    Zero,
    Positive,
}

impl Sign {
    pub fn as_f64(self) -> f64 {
        match self {
            Sign::Negative => -1.0,
            Sign::Zero => 0.0,
            Sign::Positive => 1.0,
        }
    }

    pub fn as_i8(self) -> i8 {
        match self {
            Sign::Negative => -1,
            Sign::Zero => 0,
            Sign::Positive => 1,
        }
    }

    fn product(self, other: Sign) -> Sign {
        match (self, other) {
            (Sign::Zero, _) | (_, Sign::Zero) => Sign::Zero,
            (a, b) if a == b => Sign::Positive,
            _ => Sign::Negative,
        }
    }
}

/// A real number stored as `sign * exp(log_mag)`.
///
/// `sign == Zero` iff the value is exactly zero; `log_mag` is then
/// `-inf`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogScalar {
    pub sign: Sign,
    pub log_mag: f64,
}

impl LogScalar {
    pub const ZERO: LogScalar = LogScalar {
        sign: Sign::Zero,
        log_mag: f64::NEG_INFINITY,
    };
    pub const ONE: LogScalar = LogScalar {
        sign: Sign::Positive,
        log_mag: 0.0,
    };

    pub fn new(sign: Sign, log_mag: f64) -> Self {
        if sign == Sign::Zero || log_mag == f64::NEG_INFINITY {
            Self::ZERO
        } else {
            LogScalar { sign, log_mag }
        }
    }

    /// Positive number `exp(log_mag)`.
    pub fn from_log(log_mag: f64) -> Self {
        Self::new(Sign::Positive, log_mag)
    }

    pub fn from_f64(x: f64) -> Self {
        if x > 0.0 {
            LogScalar::from_log(x.ln())
        } else if x < 0.0 {
            LogScalar::new(Sign::Negative, (-x).ln())
        } else {
            Self::ZERO
        }
    }

    pub fn to_f64(self) -> f64 {
        self.sign.as_f64() * self.log_mag.exp()
    }

    pub fn is_zero(self) -> bool {
        self.sign == Sign::Zero
    }

    pub fn abs(self) -> Self {
        match self.sign {
            Sign::Zero => self,
            _ => LogScalar::from_log(self.log_mag),
        }
    }

    /// Base-10 logarithm of the magnitude.
    pub fn log10_mag(self) -> f64 {
        self.log_mag / LN_10
    }

    pub fn powf(self, p: f64) -> Self {
        match self.sign {
            Sign::Zero => Self::ZERO,
            Sign::Positive => LogScalar::from_log(p * self.log_mag),
            Sign::Negative => panic!("fractional power of a negative LogScalar"),
        }
    }

    pub fn recip(self) -> Self {
        assert!(!self.is_zero(), "reciprocal of zero");
        LogScalar::new(self.sign, -self.log_mag)
    }

    /// Sum via log-sum-exp; exact cancellation yields zero.
    pub fn add(self, other: LogScalar) -> LogScalar {
        if self.is_zero() {
            return other;
        }
        if other.is_zero() {
            return self;
        }
        let (big, small) = if self.log_mag >= other.log_mag {
            (self, other)
        } else {
            (other, self)
        };
        let ratio = (small.log_mag - big.log_mag).exp();
        let factor = if big.sign == small.sign {
            1.0 + ratio
        } else {
            1.0 - ratio
        };
        if factor == 0.0 {
            return Self::ZERO;
        }
        LogScalar::new(big.sign, big.log_mag + factor.ln())
    }

    pub fn sub(self, other: LogScalar) -> LogScalar {
        self.add(-other)
    }

    /// `self / other` as an ordinary float (useful for ratios of tiny values).
    pub fn ratio(self, other: LogScalar) -> f64 {
        (self / other).to_f64()
    }
}

impl Mul for LogScalar {
    type Output = LogScalar;
    fn mul(self, rhs: LogScalar) -> LogScalar {
        LogScalar::new(self.sign.product(rhs.sign), self.log_mag + rhs.log_mag)
    }
}

impl Div for LogScalar {
    type Output = LogScalar;
    fn div(self, rhs: LogScalar) -> LogScalar {
        self * rhs.recip()
    }
}

impl Neg for LogScalar {
    type Output = LogScalar;
    fn neg(self) -> LogScalar {
        let sign = match self.sign {
            Sign::Negative => Sign::Positive,
            Sign::Positive => Sign::Negative,
            Sign::Zero => Sign::Zero,
        };
        LogScalar::new(sign, self.log_mag)
    }
}

impl fmt::Display for LogScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.sign {
            Sign::Zero => write!(f, "0"),
            s => write!(
                f,
                "{}1e{:.6}",
                if s == Sign::Negative { "-" } else { "+" },
                self.log10_mag()
            ),
        }
    }
}

/// Wrap an angle into `(-pi, pi]`.
pub fn wrap_phase(theta: f64) -> f64 {
    let mut t = theta % (2.0 * PI);
    if t <= -PI {
        t += 2.0 * PI;
    } else if t > PI {
        t -= 2.0 * PI;
    }
    t
}

/// A complex number stored as `exp(log_mag + i*phase)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogComplex {
    pub log_mag: f64,
    pub phase: f64,
}

impl LogComplex {
    pub const ZERO: LogComplex = LogComplex {
        log_mag: f64::NEG_INFINITY,
        phase: 0.0,
    };

    pub fn new(log_mag: f64, phase: f64) -> Self {
        if log_mag == f64::NEG_INFINITY {
            Self::ZERO
        } else {
            LogComplex {
                log_mag,
                phase: wrap_phase(phase),
            }
        }
    }

    /// `exp(z)` for a complex exponent.
    pub fn exp(z: Complex64) -> Self {
        LogComplex::new(z.re, z.im)
    }

    pub fn from_complex(z: Complex64) -> Self {
        if z.re == 0.0 && z.im == 0.0 {
            Self::ZERO
        } else {
            LogComplex::new(z.norm().ln(), z.arg())
        }
    }

    pub fn from_scalar(x: LogScalar) -> Self {
        match x.sign {
            Sign::Zero => Self::ZERO,
            Sign::Positive => LogComplex::new(x.log_mag, 0.0),
            Sign::Negative => LogComplex::new(x.log_mag, PI),
        }
    }

    pub fn is_zero(self) -> bool {
        self.log_mag == f64::NEG_INFINITY
    }

    pub fn to_complex(self) -> Complex64 {
        if self.is_zero() {
            return Complex64::new(0.0, 0.0);
        }
        Complex64::from_polar(self.log_mag.exp(), self.phase)
    }

    /// Value relative to `exp(log_scale)`, i.e. `self * exp(-log_scale)`.
    pub fn scaled(self, log_scale: f64) -> Complex64 {
        if self.is_zero() {
            return Complex64::new(0.0, 0.0);
        }
        Complex64::from_polar((self.log_mag - log_scale).exp(), self.phase)
    }

    pub fn conj(self) -> Self {
        LogComplex::new(self.log_mag, -self.phase)
    }

    pub fn modulus(self) -> LogScalar {
        if self.is_zero() {
            LogScalar::ZERO
        } else {
            LogScalar::from_log(self.log_mag)
        }
    }

    pub fn log10_mag(self) -> f64 {
        self.log_mag / LN_10
    }

    pub fn add(self, other: LogComplex) -> LogComplex {
        if self.is_zero() {
            return other;
        }
        if other.is_zero() {
            return self;
        }
        let scale = self.log_mag.max(other.log_mag);
        let sum = self.scaled(scale) + other.scaled(scale);
        let z = LogComplex::from_complex(sum);
        if z.is_zero() {
            z
        } else {
            LogComplex::new(z.log_mag + scale, z.phase)
        }
    }

    pub fn scale(self, factor: LogScalar) -> LogComplex {
        self * LogComplex::from_scalar(factor)
    }
}

impl Mul for LogComplex {
    type Output = LogComplex;
    fn mul(self, rhs: LogComplex) -> LogComplex {
        if self.is_zero() || rhs.is_zero() {
            return Self::ZERO;
        }
        LogComplex::new(self.log_mag + rhs.log_mag, self.phase + rhs.phase)
    }
}
