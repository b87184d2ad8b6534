//! Scalar abstraction shared by the linear-algebra kernels, plus a small
//! fixed-precision binary floating point type.
//!
//! The power series of `q(λ)` is an alternating sum whose largest terms grow
//! like `e^{nλ}` while the sum itself stays bounded by one, so evaluating it
//! on `λ ∈ [0, 30]` needs far more than 53 bits. [`BigFloat`] carries a
//! mantissa of `prec` bits on top of [`num_bigint::BigUint`]; it only
//! implements what the recursions need (the four operations and
//! conversions), rounding to nearest after every operation.

use core::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};

/// Field operations plus the few conversions the engines need.
pub trait Real:
    Clone
    + core::fmt::Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    /// Converts `x` into a value carrying the same precision as `self`.
    fn cast(&self, x: f64) -> Self;
    fn to_f64(&self) -> f64;
    /// `log2 |x|`, or `-inf` for zero. Finite for every nonzero value even
    /// when the value itself is outside the `f64` exponent range.
    fn log2_abs(&self) -> f64;
    fn is_zero(&self) -> bool;
}

impl Real for f64 {
    #[inline]
    fn cast(&self, x: f64) -> Self {
        x
    }
    #[inline]
    fn to_f64(&self) -> f64 {
        *self
    }
    fn log2_abs(&self) -> f64 {
        libm::log2(libm::fabs(*self))
    }
    #[inline]
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
}

/// `(-1)^neg · mag · 2^exp`, with `mag` rounded to at most `prec` bits.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BigFloat {
    neg: bool,
    mag: BigUint,
    exp: i64,
    prec: u32,
}

impl BigFloat {
    /// Smallest precision accepted; anything lower is raised to this.
    pub const MIN_PRECISION: u32 = 16;

    pub fn zero(prec: u32) -> Self {
        BigFloat {
            neg: false,
            mag: BigUint::zero(),
            exp: 0,
            prec: prec.max(Self::MIN_PRECISION),
        }
    }

    /// Exact conversion (the result is then rounded to `prec` bits).
    ///
    /// # Panics
    /// If `x` is not finite.
    pub fn from_f64(x: f64, prec: u32) -> Self {
        assert!(x.is_finite(), "BigFloat::from_f64: non-finite input {x}");
        if x == 0.0 {
            return Self::zero(prec);
        }
        let bits = x.to_bits();
        let neg = bits >> 63 == 1;
        let biased = ((bits >> 52) & 0x7ff) as i64;
        let frac = bits & ((1u64 << 52) - 1);
        let (mant, exp) = if biased == 0 {
            (frac, -1074)
        } else {
            (frac | (1u64 << 52), biased - 1075)
        };
        Self::normalized(neg, BigUint::from(mant), exp, prec)
    }

    pub fn precision(&self) -> u32 {
        self.prec
    }

    pub fn with_precision(&self, prec: u32) -> Self {
        Self::normalized(self.neg, self.mag.clone(), self.exp, prec)
    }

    pub fn abs(&self) -> Self {
        BigFloat {
            neg: false,
            ..self.clone()
        }
    }

    pub fn is_negative(&self) -> bool {
        self.neg
    }

    fn normalized(neg: bool, mut mag: BigUint, mut exp: i64, prec: u32) -> Self {
        let prec = prec.max(Self::MIN_PRECISION);
        if mag.is_zero() {
            return Self::zero(prec);
        }
        let bits = mag.bits();
        if bits > u64::from(prec) {
            let shift = bits - u64::from(prec);
            let round_up = mag.bit(shift - 1);
            mag >>= shift;
            exp += shift as i64;
            if round_up {
                mag += 1u32;
                if mag.bits() > u64::from(prec) {
                    mag >>= 1u32;
                    exp += 1;
                }
            }
        }
        // strip trailing zeros so equal values compare equal
        if let Some(tz) = mag.trailing_zeros() {
            if tz > 0 {
                mag >>= tz;
                exp += tz as i64;
            }
        }
        BigFloat {
            neg,
            mag,
            exp,
            prec,
        }
    }

    /// Position just above the most significant bit: `|x| < 2^top`.
    fn top(&self) -> i64 {
        self.exp + self.mag.bits() as i64
    }

    fn add_signed(&self, other: &Self, negate_other: bool) -> Self {
        let prec = self.prec.max(other.prec);
        let other_neg = other.neg ^ negate_other;
        if other.mag.is_zero() {
            return self.with_precision(prec);
        }
        if self.mag.is_zero() {
            return Self::normalized(other_neg, other.mag.clone(), other.exp, prec);
        }
        // operands that cannot influence the rounded result
        let guard = i64::from(prec) + 2;
        if self.top() - other.top() > guard {
            return self.with_precision(prec);
        }
        if other.top() - self.top() > guard {
            return Self::normalized(other_neg, other.mag.clone(), other.exp, prec);
        }
        let exp = self.exp.min(other.exp);
        let a = &self.mag << ((self.exp - exp) as u64);
        let b = &other.mag << ((other.exp - exp) as u64);
        if self.neg == other_neg {
            Self::normalized(self.neg, a + b, exp, prec)
        } else if a >= b {
            Self::normalized(self.neg, a - b, exp, prec)
        } else {
            Self::normalized(other_neg, b - a, exp, prec)
        }
    }

    fn mul_ref(&self, other: &Self) -> Self {
        let prec = self.prec.max(other.prec);
        Self::normalized(
            self.neg ^ other.neg,
            &self.mag * &other.mag,
            self.exp + other.exp,
            prec,
        )
    }

    fn div_ref(&self, other: &Self) -> Self {
        assert!(!other.mag.is_zero(), "BigFloat division by zero");
        let prec = self.prec.max(other.prec);
        if self.mag.is_zero() {
            return Self::zero(prec);
        }
        let shift = (i64::from(prec) + 2 + other.mag.bits() as i64 - self.mag.bits() as i64).max(0);
        let q = (&self.mag << (shift as u64)) / &other.mag;
        Self::normalized(self.neg ^ other.neg, q, self.exp - other.exp - shift, prec)
    }

    /// Leading 64 bits of the mantissa and the matching binary exponent.
    fn leading(&self) -> (u64, i64) {
        let bits = self.mag.bits();
        if bits > 64 {
            let top = (&self.mag >> (bits - 64)).to_u64().unwrap_or(u64::MAX);
            (top, self.exp + (bits - 64) as i64)
        } else {
            (self.mag.to_u64().unwrap_or(0), self.exp)
        }
    }
}

impl Real for BigFloat {
    fn cast(&self, x: f64) -> Self {
        BigFloat::from_f64(x, self.prec)
    }

    fn to_f64(&self) -> f64 {
        if self.mag.is_zero() {
            return 0.0;
        }
        let (top, exp) = self.leading();
        let mag = if exp > 2100 {
            f64::INFINITY
        } else if exp < -2300 {
            0.0
        } else {
            libm::scalbn(top as f64, exp as i32)
        };
        if self.neg {
            -mag
        } else {
            mag
        }
    }

    fn log2_abs(&self) -> f64 {
        if self.mag.is_zero() {
            return f64::NEG_INFINITY;
        }
        let (top, exp) = self.leading();
        libm::log2(top as f64) + exp as f64
    }

    fn is_zero(&self) -> bool {
        self.mag.is_zero()
    }
}

impl Add for BigFloat {
    type Output = BigFloat;
    fn add(self, rhs: Self) -> Self {
        self.add_signed(&rhs, false)
    }
}

impl Sub for BigFloat {
    type Output = BigFloat;
    fn sub(self, rhs: Self) -> Self {
        self.add_signed(&rhs, true)
    }
}

impl Mul for BigFloat {
    type Output = BigFloat;
    fn mul(self, rhs: Self) -> Self {
        self.mul_ref(&rhs)
    }
}

impl Div for BigFloat {
    type Output = BigFloat;
    fn div(self, rhs: Self) -> Self {
        self.div_ref(&rhs)
    }
}

impl<'a> Add<&'a BigFloat> for &'a BigFloat {
    type Output = BigFloat;
    fn add(self, rhs: &'a BigFloat) -> BigFloat {
        self.add_signed(rhs, false)
    }
}

impl<'a> Sub<&'a BigFloat> for &'a BigFloat {
    type Output = BigFloat;
    fn sub(self, rhs: &'a BigFloat) -> BigFloat {
        self.add_signed(rhs, true)
    }
}

impl<'a> Mul<&'a BigFloat> for &'a BigFloat {
    type Output = BigFloat;
    fn mul(self, rhs: &'a BigFloat) -> BigFloat {
        self.mul_ref(rhs)
    }
}

impl<'a> Div<&'a BigFloat> for &'a BigFloat {
    type Output = BigFloat;
    fn div(self, rhs: &'a BigFloat) -> BigFloat {
        self.div_ref(rhs)
    }
}

impl Neg for BigFloat {
    type Output = BigFloat;
    fn neg(mut self) -> Self {
        if !self.mag.is_zero() {
            self.neg = !self.neg;
        }
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn big(x: f64) -> BigFloat {
        BigFloat::from_f64(x, 128)
    }

    #[test]
    fn tiny_difference_survives_at_high_precision() {
        let one = BigFloat::from_f64(1.0, 160);
        let eps = BigFloat::from_f64(libm::scalbn(1.0, -120), 160);
        let d = (one.clone() + eps.clone()) - one;
        assert_eq!(d, eps);
    }

    #[test]
    fn division_is_accurate_to_precision() {
        let three = BigFloat::from_f64(3.0, 200);
        let one = three.cast(1.0);
        let x = (one.clone() / three.clone()) * three;
        let err = (x - one).log2_abs();
        assert!(err < -195.0, "log2 error {err}");
    }

    #[test]
    fn huge_and_tiny_exponents_do_not_overflow() {
        let mut x = BigFloat::from_f64(1e300, 64);
        let y = x.clone();
        x = x.clone() * y.clone() * y;
        assert!((x.log2_abs() - 3.0 * libm::log2(1e300)).abs() < 1e-9);
        assert_eq!(x.to_f64(), f64::INFINITY);
        let z = BigFloat::from_f64(1.0, 64) / x;
        assert_eq!(z.to_f64(), 0.0);
    }

    #[test]
    fn zero_and_sign_handling() {
        let a = big(2.5);
        assert!((a.clone() - a.clone()).is_zero());
        assert_eq!((-a.clone()).to_f64(), -2.5);
        assert_eq!((big(0.0) * a.clone()).to_f64(), 0.0);
        assert_eq!((big(-1.5) * big(-2.0)).to_f64(), 3.0);
        assert!(big(-0.25).is_negative());
        assert_eq!(big(-0.25).abs().to_f64(), 0.25);
    }

    proptest! {
        #[test]
        fn f64_round_trip(x in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL) {
            prop_assert_eq!(BigFloat::from_f64(x, 64).to_f64(), x);
        }

        #[test]
        fn arithmetic_matches_f64(a in -1e6f64..1e6, b in -1e6f64..1e6) {
            prop_assume!(b.abs() > 1e-3);
            let (x, y) = (big(a), big(b));
            let tol = |v: f64| 4.0 * f64::EPSILON * v.abs().max(1e-300);
            prop_assert!(((x.clone() + y.clone()).to_f64() - (a + b)).abs() <= tol(a.abs() + b.abs()));
            prop_assert!(((x.clone() - y.clone()).to_f64() - (a - b)).abs() <= tol(a.abs() + b.abs()));
            prop_assert!(((x.clone() * y.clone()).to_f64() - a * b).abs() <= tol(a * b));
            prop_assert!(((x / y).to_f64() - a / b).abs() <= tol(a / b));
        }
    }
}
