//! Scalar abstraction shared by every construction in the crate.
//!
//! The library is written once against [`Scalar`]. The exact instantiation
//! ([`crate::Rational`], arbitrary precision) is what every duality check
//! uses; `f64` is supported for quick experiments and comparisons.

use std::fmt::{Debug, Display};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Ordered field used by the solvers and liftings.
///
/// Exact types report a zero tolerance, so every `approx_*` helper collapses
/// to the exact comparison.
pub trait Scalar:
    Clone + Debug + Display + PartialOrd + Num + Signed + FromPrimitive + Send + Sync + 'static
{
    fn tolerance() -> Self;

    fn is_exact() -> bool;

    fn from_ratio(numer: i64, denom: i64) -> Self;

    fn from_rational(r: &BigRational) -> Self;

    fn to_f64(&self) -> f64;

    fn floor(&self) -> Self;

    fn ceil(&self) -> Self;

    /// `self^p` for `self >= 0` and rational `p > 0`. Exact types return the
    /// exact power when it is rational and otherwise an approximation that
    /// is truncated after `digits` decimal places.
    fn pow_rational(&self, p: &BigRational, digits: u32) -> Self;

    fn approx_eq(&self, other: &Self) -> bool {
        (self.clone() - other.clone()).abs() <= Self::tolerance()
    }

    fn approx_le(&self, other: &Self) -> bool {
        *self <= other.clone() + Self::tolerance()
    }

    fn is_pos(&self) -> bool {
        *self > Self::tolerance()
    }

    fn is_neg(&self) -> bool {
        *self < -Self::tolerance()
    }

    fn near_zero(&self) -> bool {
        self.abs() <= Self::tolerance()
    }
}

impl Scalar for BigRational {
    fn tolerance() -> Self {
        Self::zero()
    }

    fn is_exact() -> bool {
        true
    }

    fn from_ratio(numer: i64, denom: i64) -> Self {
        BigRational::new(numer.into(), denom.into())
    }

    fn from_rational(r: &BigRational) -> Self {
        r.clone()
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn floor(&self) -> Self {
        BigRational::floor(self)
    }

    fn ceil(&self) -> Self {
        BigRational::ceil(self)
    }

    fn pow_rational(&self, p: &BigRational, digits: u32) -> Self {
        assert!(!self.is_negative(), "pow_rational of a negative base");
        assert!(p.is_positive(), "pow_rational needs a positive exponent");
        if self.is_zero() || self.is_one() {
            return self.clone();
        }
        let num = p.numer().to_u32().expect("exponent numerator too large");
        let den = p.denom().to_u32().expect("exponent denominator too large");
        let base = num_traits::pow(self.clone(), num as usize);
        nth_root(&base, den, digits)
    }
}

impl Scalar for f64 {
    fn tolerance() -> Self {
        1e-9
    }

    fn is_exact() -> bool {
        false
    }

    fn from_ratio(numer: i64, denom: i64) -> Self {
        numer as f64 / denom as f64
    }

    fn from_rational(r: &BigRational) -> Self {
        ToPrimitive::to_f64(r).unwrap_or(f64::NAN)
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn floor(&self) -> Self {
        f64::floor(*self)
    }

    fn ceil(&self) -> Self {
        f64::ceil(*self)
    }

    fn pow_rational(&self, p: &BigRational, _digits: u32) -> Self {
        self.powf(ToPrimitive::to_f64(p).unwrap_or(f64::NAN))
    }
}

/// Exact `den`-th root when `x` is a perfect power, otherwise the root
/// truncated to `digits` decimal places.
fn nth_root(x: &BigRational, den: u32, digits: u32) -> BigRational {
    if den == 1 {
        return x.clone();
    }
    let (n, d) = (x.numer().clone(), x.denom().clone());
    let rn = n.nth_root(den);
    let rd = d.nth_root(den);
    if num_traits::pow(rn.clone(), den as usize) == n && num_traits::pow(rd.clone(), den as usize) == d {
        return BigRational::new(rn, rd);
    }
    // root(n/d) = root(n * d^(den-1)) / d, scaled by 10^digits
    let scale = num_traits::pow(BigInt::from(10u32), digits as usize);
    let radicand = n * num_traits::pow(d.clone(), (den - 1) as usize) * num_traits::pow(scale.clone(), den as usize);
    BigRational::new(radicand.nth_root(den), d * scale)
}

pub fn max_of<S: Scalar>(a: S, b: S) -> S {
    if a >= b {
        a
    } else {
        b
    }
}

pub fn min_of<S: Scalar>(a: S, b: S) -> S {
    if a <= b {
        a
    } else {
        b
    }
}

/// Truncated addition `min(1, a + b)`.
pub fn oplus<S: Scalar>(a: &S, b: &S) -> S {
    min_of(S::one(), a.clone() + b.clone())
}

/// Truncated subtraction `max(0, a - b)`.
pub fn ominus<S: Scalar>(a: &S, b: &S) -> S {
    max_of(S::zero(), a.clone() - b.clone())
}

/// Parses `"p/q"`, `"p"` or a plain decimal such as `"0.25"`.
pub fn parse_rational(text: &str) -> Result<BigRational> {
    let t = text.trim();
    let bad = || Error::Validation(format!("cannot parse rational {text:?}"));
    if let Some((p, q)) = t.split_once('/') {
        let p = BigInt::from_str_radix(p.trim(), 10).map_err(|_| bad())?;
        let q = BigInt::from_str_radix(q.trim(), 10).map_err(|_| bad())?;
        if q.is_zero() {
            return Err(Error::Validation(format!("zero denominator in {text:?}")));
        }
        return Ok(BigRational::new(p, q));
    }
    if let Some((int, frac)) = t.split_once('.') {
        let negative = int.starts_with('-');
        let int = if int.is_empty() || int == "-" { "0" } else { int };
        let whole = BigInt::from_str_radix(int, 10).map_err(|_| bad())?;
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let scale = num_traits::pow(BigInt::from(10u32), frac.len());
        let frac = BigRational::new(BigInt::from_str_radix(frac, 10).map_err(|_| bad())?, scale);
        let whole = BigRational::from_integer(whole.abs());
        let value = whole + frac;
        return Ok(if negative { -value } else { value });
    }
    BigInt::from_str_radix(t, 10)
        .map(BigRational::from_integer)
        .map_err(|_| bad())
}

/// `"p/q"`, or `"p"` for integers.
pub fn format_rational(r: &BigRational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Decimal expansion truncated (toward zero) after `digits` places.
pub fn to_decimal_string(r: &BigRational, digits: usize) -> String {
    let negative = r.is_negative();
    let abs = r.abs();
    let (int, rem) = abs.numer().div_rem(abs.denom());
    let scale = num_traits::pow(BigInt::from(10u32), digits);
    let frac = (rem * scale) / abs.denom();
    let mut out = String::new();
    if negative && !(int.is_zero() && frac.is_zero()) {
        out.push('-');
    }
    out.push_str(&int.to_string());
    if digits > 0 {
        let frac = frac.to_string();
        out.push('.');
        out.push_str(&"0".repeat(digits - frac.len()));
        out.push_str(&frac);
    }
    out
}

/// Lowest common multiple of the denominators, used to size rational grids.
pub fn denominator_lcm<'a>(values: impl IntoIterator<Item = &'a BigRational>) -> BigInt {
    values
        .into_iter()
        .fold(BigInt::one(), |acc, v| acc.lcm(v.denom()))
}
