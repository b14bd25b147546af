//! Exact dyadic rationals `m * 2^e` and complex dyadic points.
//!
//! Every rigorous quantity in the crate is a [`Dyadic`]. Values are kept in
//! canonical form (odd mantissa, or zero with exponent 0) so that equality and
//! hashing are structural. Addition, subtraction and multiplication are exact;
//! everything that cannot be exact (division, square roots, rounding to a
//! grid) takes an explicit [`Round`] direction.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::ParseError;

/// Rounding direction for inexact operations.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Round {
    /// Toward negative infinity.
    Floor,
    /// Toward positive infinity.
    Ceil,
    /// To nearest, ties toward positive infinity.
    Nearest,
}

/// Shift `m` right by `k` bits with the given rounding. Works on magnitudes so
/// the result does not depend on how the bigint library shifts negatives.
pub(crate) fn shr_round(m: &BigInt, k: u64, mode: Round) -> BigInt {
    if k == 0 {
        return m.clone();
    }
    let mag = m.magnitude();
    let q = mag >> k;
    let low_nonzero = match mag.trailing_zeros() {
        Some(tz) => tz < k,
        None => false,
    };
    let neg = m.sign() == Sign::Minus;
    let bump = match mode {
        Round::Floor => neg && low_nonzero,
        Round::Ceil => !neg && low_nonzero,
        Round::Nearest => {
            // compare the discarded bits against one half
            let half_bit = mag.bit(k - 1);
            if !half_bit {
                false
            } else {
                let rest_nonzero = match mag.trailing_zeros() {
                    Some(tz) => tz < k - 1,
                    None => false,
                };
                // ties go toward +inf: bump magnitude for positives only
                rest_nonzero || !neg
            }
        }
    };
    let q = if bump { q + BigUint::one() } else { q };
    BigInt::from_biguint(if neg { Sign::Minus } else { Sign::Plus }, q)
}

/// An exact dyadic rational `mantissa * 2^exponent`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Dyadic {
    mantissa: BigInt,
    exponent: i64,
}

impl Dyadic {
    pub fn new(mantissa: impl Into<BigInt>, exponent: i64) -> Self {
        let mut mantissa = mantissa.into();
        let mut exponent = exponent;
        match mantissa.trailing_zeros() {
            None => exponent = 0,
            Some(0) => {}
            Some(tz) => {
                mantissa >>= tz;
                exponent += tz as i64;
            }
        }
        Dyadic { mantissa, exponent }
    }

    pub fn zero() -> Self {
        Dyadic { mantissa: BigInt::zero(), exponent: 0 }
    }

    pub fn one() -> Self {
        Dyadic { mantissa: BigInt::one(), exponent: 0 }
    }

    pub fn from_int(v: i64) -> Self {
        Dyadic::new(v, 0)
    }

    /// `2^e`.
    pub fn pow2(e: i64) -> Self {
        Dyadic { mantissa: BigInt::one(), exponent: e }
    }

    /// Exact conversion. Panics on NaN or infinity.
    pub fn from_f64(x: f64) -> Self {
        assert!(x.is_finite(), "Dyadic::from_f64 of non-finite value {x}");
        if x == 0.0 {
            return Dyadic::zero();
        }
        let bits = x.to_bits();
        let sign = if bits >> 63 == 1 { -1i64 } else { 1 };
        let exp_bits = ((bits >> 52) & 0x7ff) as i64;
        let frac = bits & ((1u64 << 52) - 1);
        let (m, e) = if exp_bits == 0 {
            (frac, -1074)
        } else {
            (frac | (1u64 << 52), exp_bits - 1075)
        };
        Dyadic::new(BigInt::from(m) * sign, e)
    }

    pub fn mantissa(&self) -> &BigInt {
        &self.mantissa
    }

    pub fn exponent(&self) -> i64 {
        self.exponent
    }

    pub fn is_zero(&self) -> bool {
        self.mantissa.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.mantissa.is_negative()
    }

    pub fn is_positive(&self) -> bool {
        self.mantissa.is_positive()
    }

    pub fn signum(&self) -> i32 {
        match self.mantissa.sign() {
            Sign::Minus => -1,
            Sign::NoSign => 0,
            Sign::Plus => 1,
        }
    }

    pub fn abs(&self) -> Self {
        Dyadic { mantissa: self.mantissa.abs(), exponent: self.exponent }
    }

    /// Multiply by `2^k` (exact).
    pub fn mul_pow2(&self, k: i64) -> Self {
        if self.is_zero() {
            return Dyadic::zero();
        }
        Dyadic { mantissa: self.mantissa.clone(), exponent: self.exponent + k }
    }

    /// Number of fractional bits needed to represent the value exactly.
    pub fn frac_bits(&self) -> i64 {
        (-self.exponent).max(0)
    }

    /// Position of the most significant bit: `2^(msb-1) <= |x| < 2^msb`.
    /// Returns `None` for zero.
    pub fn msb(&self) -> Option<i64> {
        if self.is_zero() {
            None
        } else {
            Some(self.mantissa.bits() as i64 + self.exponent)
        }
    }

    /// Round to a multiple of `2^-frac_bits`.
    pub fn round_to(&self, frac_bits: i64, mode: Round) -> Self {
        if self.exponent >= -frac_bits {
            return self.clone();
        }
        let k = (-frac_bits - self.exponent) as u64;
        Dyadic::new(shr_round(&self.mantissa, k, mode), -frac_bits)
    }

    /// Round to at most `bits` significant mantissa bits.
    pub fn round_mantissa(&self, bits: u32, mode: Round) -> Self {
        let len = self.mantissa.bits();
        if len <= bits as u64 {
            return self.clone();
        }
        let k = len - bits as u64;
        Dyadic::new(shr_round(&self.mantissa, k, mode), self.exponent + k as i64)
    }

    /// Largest integer `<= self`.
    pub fn floor_int(&self) -> BigInt {
        if self.exponent >= 0 {
            &self.mantissa << self.exponent as u64
        } else {
            shr_round(&self.mantissa, (-self.exponent) as u64, Round::Floor)
        }
    }

    /// Smallest integer `>= self`.
    pub fn ceil_int(&self) -> BigInt {
        if self.exponent >= 0 {
            &self.mantissa << self.exponent as u64
        } else {
            shr_round(&self.mantissa, (-self.exponent) as u64, Round::Ceil)
        }
    }

    pub fn is_integer(&self) -> bool {
        self.exponent >= 0 || self.is_zero()
    }

    /// `self * 2^k` as an exact integer, if it is one.
    pub fn scaled_int(&self, k: i64) -> Option<BigInt> {
        let e = self.exponent + k;
        if self.is_zero() {
            Some(BigInt::zero())
        } else if e >= 0 {
            Some(&self.mantissa << e as u64)
        } else {
            None
        }
    }

    /// Nearest `f64` (approximate; for display, heuristics and test oracles).
    pub fn to_f64(&self) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        let len = self.mantissa.bits();
        let (m, e) = if len > 64 {
            let k = len - 64;
            (shr_round(&self.mantissa, k, Round::Nearest), self.exponent + k as i64)
        } else {
            (self.mantissa.clone(), self.exponent)
        };
        let mf = m.to_f64().unwrap_or(f64::NAN);
        scale_f64(mf, e)
    }

    pub fn pow(&self, k: u32) -> Self {
        if k == 0 {
            return Dyadic::one();
        }
        Dyadic::new(num_traits::pow(self.mantissa.clone(), k as usize), self.exponent * k as i64)
    }

    /// Quotient rounded to a multiple of `2^-frac_bits`.
    pub fn div_round(&self, other: &Dyadic, frac_bits: i64, mode: Round) -> Self {
        assert!(!other.is_zero(), "dyadic division by zero");
        // a/b * 2^p = ma/mb * 2^(ea - eb + p)
        let t = self.exponent - other.exponent + frac_bits;
        let (num, den) = if t >= 0 {
            (&self.mantissa << t as u64, other.mantissa.clone())
        } else {
            (self.mantissa.clone(), &other.mantissa << (-t) as u64)
        };
        let q = match mode {
            Round::Floor => num.div_floor(&den),
            Round::Ceil => num.div_ceil(&den),
            Round::Nearest => {
                let twice = (num << 1u32) + &den;
                twice.div_floor(&(den << 1u32))
            }
        };
        Dyadic::new(q, -frac_bits)
    }

    /// Quotient with about `bits` significant bits, rounded in direction `mode`.
    pub fn div_rel(&self, other: &Dyadic, bits: u32, mode: Round) -> Self {
        let (Some(a), Some(b)) = (self.msb(), other.msb()) else {
            return self.div_round(other, 0, mode);
        };
        let frac = bits as i64 - (a - b);
        self.div_round(other, frac, mode)
    }

    /// Bounds on `sqrt(self)` at absolute precision `2^-frac_bits`.
    /// Panics if `self` is negative.
    pub fn sqrt_bounds(&self, frac_bits: i64) -> (Dyadic, Dyadic) {
        assert!(!self.is_negative(), "square root of negative dyadic");
        if self.is_zero() {
            return (Dyadic::zero(), Dyadic::zero());
        }
        let scaled = self.mul_pow2(2 * frac_bits);
        let lo_int = scaled.floor_int();
        let hi_int = scaled.ceil_int();
        let lo = lo_int.sqrt();
        let mut hi = hi_int.sqrt();
        if &hi * &hi < hi_int {
            hi += 1;
        }
        (Dyadic::new(lo, -frac_bits), Dyadic::new(hi, -frac_bits))
    }

    /// Bounds on `sqrt(self)` with about `bits` significant bits.
    pub fn sqrt_bounds_rel(&self, bits: u32) -> (Dyadic, Dyadic) {
        match self.msb() {
            None => (Dyadic::zero(), Dyadic::zero()),
            Some(msb) => {
                let frac = bits as i64 - msb.div_euclid(2);
                self.sqrt_bounds(frac)
            }
        }
    }

    pub fn sqrt_floor(&self, bits: u32) -> Dyadic {
        self.sqrt_bounds_rel(bits).0
    }

    pub fn sqrt_ceil(&self, bits: u32) -> Dyadic {
        self.sqrt_bounds_rel(bits).1
    }

    pub fn min(self, other: Dyadic) -> Dyadic {
        if self <= other {
            self
        } else {
            other
        }
    }

    pub fn max(self, other: Dyadic) -> Dyadic {
        if self >= other {
            self
        } else {
            other
        }
    }

    /// Exact decimal expansion (dyadic rationals always terminate in base 10).
    pub fn to_decimal(&self) -> String {
        if self.exponent >= 0 {
            return (&self.mantissa << self.exponent as u64).to_string();
        }
        let k = (-self.exponent) as usize;
        let scaled = self.mantissa.abs() * num_traits::pow(BigInt::from(5), k);
        let mut digits = scaled.to_string();
        if digits.len() <= k {
            digits = format!("{}{}", "0".repeat(k + 1 - digits.len()), digits);
        }
        let split = digits.len() - k;
        let sign = if self.is_negative() { "-" } else { "" };
        format!("{sign}{}.{}", &digits[..split], &digits[split..])
    }

    /// Parse a decimal string; succeeds only if the value is an exact dyadic.
    pub fn from_decimal(s: &str) -> Result<Self, ParseError> {
        let dec = Decimal::parse(s)?;
        dec.to_dyadic().ok_or_else(|| ParseError::NotDyadic(s.to_string()))
    }
}

pub(crate) fn scale_f64(x: f64, e: i64) -> f64 {
    let mut x = x;
    let mut e = e;
    while e > 1000 {
        x *= 2f64.powi(1000);
        e -= 1000;
    }
    while e < -1000 {
        x *= 2f64.powi(-1000);
        e += 1000;
    }
    x * 2f64.powi(e as i32)
}

impl Default for Dyadic {
    fn default() -> Self {
        Dyadic::zero()
    }
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> Ordering {
        let (sa, sb) = (self.signum(), other.signum());
        if sa != sb {
            return sa.cmp(&sb);
        }
        if sa == 0 {
            return Ordering::Equal;
        }
        // same nonzero sign: compare magnitudes by leading bit first
        let (ma, mb) = (self.msb().unwrap(), other.msb().unwrap());
        let mag = if ma != mb {
            ma.cmp(&mb)
        } else {
            let e = self.exponent.min(other.exponent);
            let a = self.mantissa.magnitude() << (self.exponent - e) as u64;
            let b = other.mantissa.magnitude() << (other.exponent - e) as u64;
            a.cmp(&b)
        };
        if sa > 0 {
            mag
        } else {
            mag.reverse()
        }
    }
}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Add<&Dyadic> for &Dyadic {
    type Output = Dyadic;
    fn add(self, rhs: &Dyadic) -> Dyadic {
        if self.is_zero() {
            return rhs.clone();
        }
        if rhs.is_zero() {
            return self.clone();
        }
        let e = self.exponent.min(rhs.exponent);
        let a = &self.mantissa << (self.exponent - e) as u64;
        let b = &rhs.mantissa << (rhs.exponent - e) as u64;
        Dyadic::new(a + b, e)
    }
}

impl Sub<&Dyadic> for &Dyadic {
    type Output = Dyadic;
    fn sub(self, rhs: &Dyadic) -> Dyadic {
        self + &(-rhs)
    }
}

impl Mul<&Dyadic> for &Dyadic {
    type Output = Dyadic;
    fn mul(self, rhs: &Dyadic) -> Dyadic {
        if self.is_zero() || rhs.is_zero() {
            return Dyadic::zero();
        }
        // product of odd mantissas is odd: already canonical
        Dyadic { mantissa: &self.mantissa * &rhs.mantissa, exponent: self.exponent + rhs.exponent }
    }
}

impl Neg for &Dyadic {
    type Output = Dyadic;
    fn neg(self) -> Dyadic {
        Dyadic { mantissa: -&self.mantissa, exponent: self.exponent }
    }
}

impl Neg for Dyadic {
    type Output = Dyadic;
    fn neg(self) -> Dyadic {
        Dyadic { mantissa: -self.mantissa, exponent: self.exponent }
    }
}

macro_rules! forward_owned {
    ($tr:ident, $f:ident) => {
        impl $tr<Dyadic> for Dyadic {
            type Output = Dyadic;
            fn $f(self, rhs: Dyadic) -> Dyadic {
                (&self).$f(&rhs)
            }
        }
        impl $tr<&Dyadic> for Dyadic {
            type Output = Dyadic;
            fn $f(self, rhs: &Dyadic) -> Dyadic {
                (&self).$f(rhs)
            }
        }
        impl $tr<Dyadic> for &Dyadic {
            type Output = Dyadic;
            fn $f(self, rhs: Dyadic) -> Dyadic {
                self.$f(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl From<i64> for Dyadic {
    fn from(v: i64) -> Self {
        Dyadic::from_int(v)
    }
}

/// Canonical text form `m*2^e`.
impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}*2^{}", self.mantissa, self.exponent)
    }
}

impl fmt::Debug for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}*2^{} (~{:e})", self.mantissa, self.exponent, self.to_f64())
    }
}

/// Accepts `m*2^e`, a bare integer, or an exactly-dyadic decimal.
impl FromStr for Dyadic {
    type Err = ParseError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if let Some((m, e)) = s.split_once("*2^") {
            let m: BigInt = m.trim().parse().map_err(|_| ParseError::Dyadic(s.to_string()))?;
            let e: i64 = e.trim().parse().map_err(|_| ParseError::Dyadic(s.to_string()))?;
            return Ok(Dyadic::new(m, e));
        }
        Dyadic::from_decimal(s)
    }
}

impl Serialize for Dyadic {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Dyadic {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A decimal literal held exactly as `numerator / 10^scale`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Decimal {
    numerator: BigInt,
    scale: u32,
}

impl Decimal {
    pub fn parse(s: &str) -> Result<Self, ParseError> {
        let t = s.trim();
        let err = || ParseError::Decimal(s.to_string());
        let (neg, body) = match t.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, t.strip_prefix('+').unwrap_or(t)),
        };
        let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(err());
        }
        if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
            return Err(err());
        }
        let digits = format!("{int_part}{frac_part}");
        let mut numerator: BigInt = if digits.is_empty() { BigInt::zero() } else { digits.parse().map_err(|_| err())? };
        if neg {
            numerator = -numerator;
        }
        Ok(Decimal { numerator, scale: frac_part.len() as u32 })
    }

    /// Exact value as a dyadic, if it is one.
    pub fn to_dyadic(&self) -> Option<Dyadic> {
        let five_k = num_traits::pow(BigInt::from(5), self.scale as usize);
        let (q, r) = self.numerator.div_rem(&five_k);
        if r.is_zero() {
            Some(Dyadic::new(q, -(self.scale as i64)))
        } else {
            None
        }
    }

    /// Rounded to a multiple of `2^-frac_bits`.
    pub fn round_to(&self, frac_bits: i64, mode: Round) -> Dyadic {
        let num = Dyadic::new(self.numerator.clone(), 0);
        let den = Dyadic::new(num_traits::pow(BigInt::from(10), self.scale as usize), 0);
        num.div_round(&den, frac_bits, mode)
    }
}

impl fmt::Display for Decimal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let k = self.scale as usize;
        let mut digits = self.numerator.abs().to_string();
        if k == 0 {
            return write!(f, "{}", self.numerator);
        }
        if digits.len() <= k {
            digits = format!("{}{}", "0".repeat(k + 1 - digits.len()), digits);
        }
        let split = digits.len() - k;
        let sign = if self.numerator.is_negative() { "-" } else { "" };
        write!(f, "{sign}{}.{}", &digits[..split], &digits[split..])
    }
}

/// A complex number with dyadic real and imaginary parts.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct ComplexDyadic {
    pub re: Dyadic,
    pub im: Dyadic,
}

impl ComplexDyadic {
    pub fn new(re: Dyadic, im: Dyadic) -> Self {
        ComplexDyadic { re, im }
    }

    pub fn real(re: Dyadic) -> Self {
        ComplexDyadic { re, im: Dyadic::zero() }
    }

    pub fn zero() -> Self {
        ComplexDyadic::default()
    }

    pub fn one() -> Self {
        ComplexDyadic::real(Dyadic::one())
    }

    pub fn from_f64(re: f64, im: f64) -> Self {
        ComplexDyadic { re: Dyadic::from_f64(re), im: Dyadic::from_f64(im) }
    }

    /// Round each component to `frac_bits` fractional bits (nearest).
    pub fn round_to(&self, frac_bits: i64) -> Self {
        ComplexDyadic { re: self.re.round_to(frac_bits, Round::Nearest), im: self.im.round_to(frac_bits, Round::Nearest) }
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn conj(&self) -> Self {
        ComplexDyadic { re: self.re.clone(), im: -&self.im }
    }

    pub fn norm_sqr(&self) -> Dyadic {
        &self.re * &self.re + &self.im * &self.im
    }

    pub fn mul_pow2(&self, k: i64) -> Self {
        ComplexDyadic { re: self.re.mul_pow2(k), im: self.im.mul_pow2(k) }
    }

    pub fn scale(&self, s: &Dyadic) -> Self {
        ComplexDyadic { re: &self.re * s, im: &self.im * s }
    }

    pub fn frac_bits(&self) -> i64 {
        self.re.frac_bits().max(self.im.frac_bits())
    }

    /// Upper bound on `|self|` with about `bits` significant bits.
    pub fn abs_hi(&self, bits: u32) -> Dyadic {
        self.norm_sqr().sqrt_ceil(bits)
    }

    /// Lower bound on `|self|` with about `bits` significant bits.
    pub fn abs_lo(&self, bits: u32) -> Dyadic {
        self.norm_sqr().sqrt_floor(bits)
    }

    pub fn to_f64(&self) -> (f64, f64) {
        (self.re.to_f64(), self.im.to_f64())
    }
}

impl Add<&ComplexDyadic> for &ComplexDyadic {
    type Output = ComplexDyadic;
    fn add(self, rhs: &ComplexDyadic) -> ComplexDyadic {
        ComplexDyadic { re: &self.re + &rhs.re, im: &self.im + &rhs.im }
    }
}

impl Sub<&ComplexDyadic> for &ComplexDyadic {
    type Output = ComplexDyadic;
    fn sub(self, rhs: &ComplexDyadic) -> ComplexDyadic {
        ComplexDyadic { re: &self.re - &rhs.re, im: &self.im - &rhs.im }
    }
}

impl Mul<&ComplexDyadic> for &ComplexDyadic {
    type Output = ComplexDyadic;
    fn mul(self, rhs: &ComplexDyadic) -> ComplexDyadic {
        ComplexDyadic {
            re: &self.re * &rhs.re - &self.im * &rhs.im,
            im: &self.re * &rhs.im + &self.im * &rhs.re,
        }
    }
}

impl Neg for &ComplexDyadic {
    type Output = ComplexDyadic;
    fn neg(self) -> ComplexDyadic {
        ComplexDyadic { re: -&self.re, im: -&self.im }
    }
}

/// `re,im` in [`Dyadic`] text form.
impl fmt::Display for ComplexDyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.re, self.im)
    }
}

impl fmt::Debug for ComplexDyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:?}, {:?})", self.re, self.im)
    }
}

impl Serialize for ComplexDyadic {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ComplexDyadic {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl FromStr for ComplexDyadic {
    type Err = ParseError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.split_once(',') {
            Some((re, im)) => Ok(ComplexDyadic { re: re.parse()?, im: im.parse()? }),
            None => Ok(ComplexDyadic::real(s.parse()?)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn d(s: &str) -> Dyadic {
        s.parse().unwrap()
    }

    #[test]
    fn canonical_form() {
        let x = Dyadic::new(12, 0);
        assert_eq!(x.mantissa(), &BigInt::from(3));
        assert_eq!(x.exponent(), 2);
        let z = Dyadic::new(0, 17);
        assert_eq!(z.exponent(), 0);
        assert_eq!(Dyadic::new(-8, -5), Dyadic::pow2(-2).neg());
    }

    #[test]
    fn shr_round_modes() {
        let m = BigInt::from(-5); // -5/4 = -1.25
        assert_eq!(shr_round(&m, 2, Round::Floor), BigInt::from(-2));
        assert_eq!(shr_round(&m, 2, Round::Ceil), BigInt::from(-1));
        assert_eq!(shr_round(&m, 2, Round::Nearest), BigInt::from(-1));
        let m = BigInt::from(-6); // -1.5, tie goes up
        assert_eq!(shr_round(&m, 2, Round::Nearest), BigInt::from(-1));
        let m = BigInt::from(6); // 1.5
        assert_eq!(shr_round(&m, 2, Round::Nearest), BigInt::from(2));
        let m = BigInt::from(7); // 1.75
        assert_eq!(shr_round(&m, 2, Round::Floor), BigInt::from(1));
        assert_eq!(shr_round(&m, 2, Round::Ceil), BigInt::from(2));
    }

    #[test]
    fn parse_and_print() {
        assert_eq!(d("3*2^-2").to_decimal(), "0.75");
        assert_eq!(d("-0.375"), Dyadic::new(-3, -3));
        assert_eq!(d("-2"), Dyadic::from_int(-2));
        assert_eq!(d("5*2^3").to_string(), "5*2^3");
        assert_eq!(Dyadic::new(-1, -20).to_decimal(), "-0.00000095367431640625");
        assert!("0.1".parse::<Dyadic>().is_err());
        assert!("abc".parse::<Dyadic>().is_err());
    }

    #[test]
    fn ordering_across_exponents() {
        assert!(d("1*2^-1") < d("3*2^-2"));
        assert!(d("-1*2^10") < d("1*2^-10"));
        assert!(d("-3*2^-2") < d("-1*2^-1"));
        assert_eq!(d("4").cmp(&d("1*2^2")), Ordering::Equal);
    }

    #[test]
    fn sqrt_bounds_bracket() {
        let two = Dyadic::from_int(2);
        let (lo, hi) = two.sqrt_bounds(30);
        assert!(&lo * &lo <= two && &hi * &hi >= two);
        assert!(&hi - &lo <= Dyadic::pow2(-30));
        let (lo, hi) = Dyadic::from_int(25).sqrt_bounds(10);
        assert_eq!(lo, Dyadic::from_int(5));
        assert_eq!(hi, Dyadic::from_int(5));
    }

    #[test]
    fn div_round_directions() {
        let one = Dyadic::one();
        let three = Dyadic::from_int(3);
        let lo = one.div_round(&three, 20, Round::Floor);
        let hi = one.div_round(&three, 20, Round::Ceil);
        assert!(&lo * &three < one && &hi * &three > one);
        assert_eq!(&hi - &lo, Dyadic::pow2(-20));
    }

    #[test]
    fn f64_roundtrip() {
        for x in [0.1, -3.75, 1e-300, 5e-324, 12345.678] {
            assert_eq!(Dyadic::from_f64(x).to_f64(), x);
        }
    }

    fn arb_dyadic() -> impl Strategy<Value = Dyadic> {
        (any::<i64>(), -200i64..200).prop_map(|(m, e)| Dyadic::new(m, e))
    }

    proptest! {
        #[test]
        fn text_roundtrip(x in arb_dyadic(), y in arb_dyadic()) {
            for v in [&x + &y, &x * &y, &x - &y] {
                let s = v.to_string();
                prop_assert_eq!(s.parse::<Dyadic>().unwrap(), v.clone());
                let dec = v.to_decimal();
                prop_assert_eq!(dec.parse::<Dyadic>().unwrap(), v);
            }
        }

        #[test]
        fn rounding_brackets(x in arb_dyadic(), bits in -20i64..80) {
            let lo = x.round_to(bits, Round::Floor);
            let hi = x.round_to(bits, Round::Ceil);
            let near = x.round_to(bits, Round::Nearest);
            prop_assert!(lo <= x && x <= hi);
            prop_assert!(&hi - &lo <= Dyadic::pow2(-bits));
            prop_assert!(lo <= near && near <= hi);
            prop_assert!((&near - &x).abs() <= Dyadic::pow2(-bits - 1));
        }

        #[test]
        fn ordering_matches_subtraction(x in arb_dyadic(), y in arb_dyadic()) {
            prop_assert_eq!(x.cmp(&y), (&x - &y).signum().cmp(&0));
        }
    }
}
