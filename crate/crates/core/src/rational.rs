//! Exact arbitrary-precision rationals.
//!
//! A thin newtype over [`num_rational::BigRational`] that fixes the textual
//! form (`"p/q"`, always with an explicit denominator) and adds the few
//! grid operations the solvers need.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// An exact rational number in lowest terms with a positive denominator.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Rational(BigRational);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid rational literal {0:?}")]
pub struct ParseRationalError(pub String);

impl Rational {
    pub fn new(numer: impl Into<BigInt>, denom: impl Into<BigInt>) -> Self {
        let denom = denom.into();
        assert!(!denom.is_zero(), "zero denominator");
        Rational(BigRational::new(numer.into(), denom))
    }

    pub fn from_integer(n: impl Into<BigInt>) -> Self {
        Rational(BigRational::from_integer(n.into()))
    }

    pub fn zero() -> Self {
        Rational(BigRational::zero())
    }

    pub fn one() -> Self {
        Rational(BigRational::one())
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_positive()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn is_integer(&self) -> bool {
        self.0.is_integer()
    }

    pub fn abs(&self) -> Self {
        Rational(self.0.abs())
    }

    pub fn recip(&self) -> Self {
        Rational(self.0.recip())
    }

    /// Largest integer not above `self`.
    pub fn floor_int(&self) -> BigInt {
        self.0.floor().to_integer()
    }

    /// Smallest integer not below `self`.
    pub fn ceil_int(&self) -> BigInt {
        self.0.ceil().to_integer()
    }

    /// Smallest multiple of `step` that is `>= self`. Exact multiples map to
    /// themselves.
    pub fn ceil_to_multiple(&self, step: &Rational) -> Rational {
        assert!(step.is_positive(), "grid step must be positive");
        let k = (self / step).ceil_int();
        Rational::from_integer(k) * step
    }

    /// Largest multiple of `step` that is `<= self`.
    pub fn floor_to_multiple(&self, step: &Rational) -> Rational {
        assert!(step.is_positive(), "grid step must be positive");
        let k = (self / step).floor_int();
        Rational::from_integer(k) * step
    }

    /// Integer power by repeated squaring; negative exponents invert.
    pub fn pow(&self, exp: i64) -> Rational {
        if exp < 0 {
            return self.recip().pow(-exp);
        }
        let mut base = self.0.clone();
        let mut acc = BigRational::one();
        let mut e = exp as u64;
        while e > 0 {
            if e & 1 == 1 {
                acc *= &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        Rational(acc)
    }

    pub fn min(self, other: Rational) -> Rational {
        if other < self {
            other
        } else {
            self
        }
    }

    pub fn max(self, other: Rational) -> Rational {
        if other > self {
            other
        } else {
            self
        }
    }

    /// Nearest `f64`; loses precision for huge numerators or denominators.
    pub fn to_f64(&self) -> f64 {
        if let Some(v) = self.0.to_f64() {
            if v.is_finite() {
                return v;
            }
        }
        // Both parts overflow f64: shift them down together.
        let n = self.0.numer();
        let d = self.0.denom();
        let shift = n.bits().max(d.bits()).saturating_sub(1000);
        let n = (n >> shift).to_f64().unwrap_or(f64::NAN);
        let d = (d >> shift).to_f64().unwrap_or(f64::NAN);
        n / d
    }

    /// Whether `self * 2^64 > r` for a uniform 64-bit draw `r`, i.e. whether
    /// the draw falls strictly below the threshold `self` in `[0, 1]`.
    pub fn exceeds_draw(&self, draw: u64) -> bool {
        let lhs = self.0.numer() << 64u32;
        let rhs = BigInt::from(draw) * self.0.denom();
        lhs > rhs
    }

    pub fn inner(&self) -> &BigRational {
        &self.0
    }
}

impl From<i64> for Rational {
    fn from(v: i64) -> Self {
        Rational::from_integer(v)
    }
}

impl From<BigRational> for Rational {
    fn from(v: BigRational) -> Self {
        Rational(v)
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.0.numer(), self.0.denom())
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Rational {
    type Err = ParseRationalError;

    /// Accepts `"p/q"` (q nonzero) or a bare integer `"p"`. Decimal
    /// notation is rejected.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParseRationalError(s.to_string());
        let t = s.trim();
        let (n, d) = match t.split_once('/') {
            Some((n, d)) => (n.trim(), d.trim()),
            None => (t, "1"),
        };
        let n: BigInt = n.parse().map_err(|_| err())?;
        let d: BigInt = d.parse().map_err(|_| err())?;
        if d.is_zero() {
            return Err(err());
        }
        Ok(Rational(BigRational::new(n, d)))
    }
}

impl Serialize for Rational {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Rational {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

macro_rules! forward_binop {
    ($tr:ident, $method:ident) => {
        impl $tr<Rational> for Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                Rational((self.0).$method(rhs.0))
            }
        }
        impl<'a> $tr<&'a Rational> for Rational {
            type Output = Rational;
            fn $method(self, rhs: &'a Rational) -> Rational {
                Rational((self.0).$method(&rhs.0))
            }
        }
        impl<'a> $tr<Rational> for &'a Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                Rational((&self.0).$method(rhs.0))
            }
        }
        impl<'a, 'b> $tr<&'b Rational> for &'a Rational {
            type Output = Rational;
            fn $method(self, rhs: &'b Rational) -> Rational {
                Rational((&self.0).$method(&rhs.0))
            }
        }
    };
}

forward_binop!(Add, add);
forward_binop!(Sub, sub);
forward_binop!(Mul, mul);
forward_binop!(Div, div);

impl AddAssign<&Rational> for Rational {
    fn add_assign(&mut self, rhs: &Rational) {
        self.0 += &rhs.0;
    }
}

impl AddAssign<Rational> for Rational {
    fn add_assign(&mut self, rhs: Rational) {
        self.0 += rhs.0;
    }
}

impl SubAssign<&Rational> for Rational {
    fn sub_assign(&mut self, rhs: &Rational) {
        self.0 -= &rhs.0;
    }
}

impl MulAssign<&Rational> for Rational {
    fn mul_assign(&mut self, rhs: &Rational) {
        self.0 *= &rhs.0;
    }
}

impl Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-self.0)
    }
}

impl Neg for &Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-&self.0)
    }
}

impl Sum for Rational {
    fn sum<I: Iterator<Item = Rational>>(iter: I) -> Rational {
        iter.fold(Rational::zero(), |acc, x| acc + x)
    }
}

impl<'a> Sum<&'a Rational> for Rational {
    fn sum<I: Iterator<Item = &'a Rational>>(iter: I) -> Rational {
        iter.fold(Rational::zero(), |acc, x| acc + x)
    }
}

/// Shorthand for `Rational::new(n, d)` on machine integers.
pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(n, d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn display_always_has_denominator() {
        assert_eq!(rat(4, 2).to_string(), "2/1");
        assert_eq!(rat(-40, 3).to_string(), "-40/3");
        assert_eq!(rat(3, -6).to_string(), "-1/2");
    }

    #[test]
    fn parse_forms() {
        assert_eq!("20/3".parse::<Rational>().unwrap(), rat(20, 3));
        assert_eq!("-7".parse::<Rational>().unwrap(), rat(-7, 1));
        assert_eq!(" 6/4 ".parse::<Rational>().unwrap(), rat(3, 2));
        assert!("0.7".parse::<Rational>().is_err());
        assert!("1/0".parse::<Rational>().is_err());
        assert!("".parse::<Rational>().is_err());
    }

    #[test]
    fn grid_rounding_keeps_exact_multiples() {
        let one = Rational::one();
        assert_eq!(rat(-2, 1).ceil_to_multiple(&one), rat(-2, 1));
        assert_eq!(rat(-5, 2).ceil_to_multiple(&one), rat(-2, 1));
        assert_eq!(rat(7, 3).ceil_to_multiple(&rat(1, 2)), rat(5, 2));
        assert_eq!(rat(7, 3).floor_to_multiple(&rat(1, 2)), rat(2, 1));
    }

    #[test]
    fn powers() {
        assert_eq!(rat(2, 1).pow(7), rat(128, 1));
        assert_eq!(rat(3, 2).pow(-2), rat(4, 9));
        assert_eq!(rat(5, 7).pow(0), Rational::one());
    }

    #[test]
    fn draw_threshold() {
        assert!(rat(1, 2).exceeds_draw(0));
        assert!(rat(1, 2).exceeds_draw((1u64 << 63) - 1));
        assert!(!rat(1, 2).exceeds_draw(1u64 << 63));
        assert!(Rational::one().exceeds_draw(u64::MAX));
        assert!(!Rational::zero().exceeds_draw(0));
    }

    #[test]
    fn huge_to_f64() {
        let big = Rational::new(BigInt::from(3) << 5000u32, BigInt::from(1) << 5001u32);
        assert!((big.to_f64() - 1.5).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn text_round_trip(n in -1_000_000i64..1_000_000, d in 1i64..1_000_000) {
            let r = rat(n, d);
            let back: Rational = r.to_string().parse().unwrap();
            prop_assert_eq!(back, r);
        }

        #[test]
        fn ceil_multiple_is_tight(n in -10_000i64..10_000, d in 1i64..100, sn in 1i64..50, sd in 1i64..50) {
            let x = rat(n, d);
            let step = rat(sn, sd);
            let up = x.ceil_to_multiple(&step);
            prop_assert!(up >= x);
            prop_assert!(&up - &step < x);
            prop_assert!((&up / &step).is_integer());
        }
    }
}
