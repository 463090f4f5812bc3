//! Numeric backends.
//!
//! Everything in the crate is generic over [`Scalar`]. Two backends are
//! provided: `f64` for the time-stepping paths and [`Rational`] (arbitrary
//! precision rationals) for the spectral and continued-fraction paths, where
//! eliminations must be exact. Transcendental operations on [`Rational`]
//! (only `exp` is needed) are evaluated to [`HIGH_PRECISION_BITS`] bits.

use std::fmt::Debug;
use std::ops::Neg;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Num, One, Signed, ToPrimitive, Zero};

pub type Rational = BigRational;

/// Working precision (bits) of the approximate operations on [`Rational`].
pub const HIGH_PRECISION_BITS: u32 = 192;

pub trait Scalar:
    Clone + Debug + PartialOrd + Num + Neg<Output = Self> + Send + Sync + 'static
{
    /// True when arithmetic is exact (no rounding).
    const EXACT: bool;

    fn from_i64(v: i64) -> Self;

    fn ratio(numer: i64, denom: i64) -> Self {
        Self::from_i64(numer) / Self::from_i64(denom)
    }

    /// Exact conversion for rationals (every finite double is dyadic).
    fn from_f64(v: f64) -> Option<Self>;

    fn to_f64(&self) -> f64;

    fn from_rational(v: &Rational) -> Self;

    /// Exact rational value (finite floats are dyadic rationals).
    fn to_rational(&self) -> Rational;

    fn abs(&self) -> Self {
        if *self < Self::zero() {
            -self.clone()
        } else {
            self.clone()
        }
    }

    fn exp(&self) -> Self;

    /// Simplest rational inside `[lo, hi]`, for backends that can represent it.
    fn simplest_between(_lo: &Self, _hi: &Self) -> Option<Self> {
        None
    }

    /// Whether the bracket `[lo, hi]` is resolved at working precision.
    fn bracket_converged(lo: &Self, hi: &Self) -> bool;

    /// Rounds a value to working precision (identity for floats).
    fn settle(self) -> Self {
        self
    }

    fn half(&self) -> Self {
        self.clone() / Self::from_i64(2)
    }

    fn signum_i8(&self) -> i8 {
        if self.is_zero() {
            0
        } else if *self < Self::zero() {
            -1
        } else {
            1
        }
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn from_i64(v: i64) -> Self {
        v as f64
    }

    fn from_f64(v: f64) -> Option<Self> {
        v.is_finite().then_some(v)
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn from_rational(v: &Rational) -> Self {
        Scalar::to_f64(v)
    }

    fn to_rational(&self) -> Rational {
        Rational::from_float(*self).expect("finite value")
    }

    fn abs(&self) -> Self {
        f64::abs(*self)
    }

    fn exp(&self) -> Self {
        f64::exp(*self)
    }

    fn bracket_converged(lo: &Self, hi: &Self) -> bool {
        let mid = 0.5 * (lo + hi);
        mid <= *lo || mid >= *hi || hi - lo <= 4.0 * f64::EPSILON * f64::abs(*hi).max(f64::abs(*lo))
    }
}

impl Scalar for Rational {
    const EXACT: bool = true;

    fn from_i64(v: i64) -> Self {
        Rational::from_integer(BigInt::from(v))
    }

    fn from_f64(v: f64) -> Option<Self> {
        Rational::from_float(v)
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or_else(|| {
            if self.is_negative() {
                f64::NEG_INFINITY
            } else {
                f64::INFINITY
            }
        })
    }

    fn from_rational(v: &Rational) -> Self {
        v.clone()
    }

    fn to_rational(&self) -> Rational {
        self.clone()
    }

    fn abs(&self) -> Self {
        Signed::abs(self)
    }

    fn exp(&self) -> Self {
        exp_rational(self, HIGH_PRECISION_BITS)
    }

    fn simplest_between(lo: &Self, hi: &Self) -> Option<Self> {
        Some(simplest_rational(lo, hi))
    }

    fn bracket_converged(lo: &Self, hi: &Self) -> bool {
        let scale = Signed::abs(lo).max(Signed::abs(hi)).max(Rational::one());
        let width = hi - lo;
        width * pow2(HIGH_PRECISION_BITS as i64) <= scale
    }

    fn settle(self) -> Self {
        round_relative(&self, HIGH_PRECISION_BITS + 16)
    }
}

/// `2^e` as a rational, for any integer exponent.
pub fn pow2(e: i64) -> Rational {
    let p = BigInt::one() << (e.unsigned_abs() as usize);
    if e >= 0 {
        Rational::from_integer(p)
    } else {
        Rational::new(BigInt::one(), p)
    }
}

/// Truncates `v` onto the dyadic grid `2^-frac_bits`.
pub fn round_dyadic(v: &Rational, frac_bits: i64) -> Rational {
    let (n, d) = (v.numer(), v.denom());
    if frac_bits >= 0 {
        let scaled = n << (frac_bits as usize);
        let q = scaled.div_floor(d);
        Rational::new(q, BigInt::one() << (frac_bits as usize))
    } else {
        let q = n.div_floor(&(d << ((-frac_bits) as usize)));
        Rational::from_integer(q << ((-frac_bits) as usize))
    }
}

fn bit_length(v: &BigInt) -> i64 {
    v.bits() as i64
}

/// Keeps roughly `bits` significant bits of `v`.
pub fn round_relative(v: &Rational, bits: u32) -> Rational {
    if v.is_zero() {
        return v.clone();
    }
    let magnitude = bit_length(v.numer()) - bit_length(v.denom());
    round_dyadic(v, bits as i64 - magnitude)
}

/// `exp(x)` to about `bits` significant bits via argument halving and Taylor
/// summation on a fixed dyadic grid.
pub fn exp_rational(x: &Rational, bits: u32) -> Rational {
    if x.is_zero() {
        return Rational::one();
    }
    let approx = ToPrimitive::to_f64(x).unwrap_or(f64::MAX).abs();
    let halvings = if approx > 0.0 {
        (approx.log2().ceil() as i64 + 8).max(0)
    } else {
        0
    };
    let guard = bits as i64 + halvings + 32;
    let reduced = x / pow2(halvings);

    let mut sum = Rational::one();
    let mut term = Rational::one();
    let threshold = pow2(-guard);
    let mut n: i64 = 1;
    loop {
        term = round_dyadic(&(term * &reduced / Rational::from_i64(n)), guard);
        if Signed::abs(&term) < threshold {
            break;
        }
        sum += &term;
        n += 1;
    }
    for _ in 0..halvings {
        sum = round_relative(&(&sum * &sum), guard as u32);
    }
    round_relative(&sum, bits + 16)
}

/// The rational with the smallest denominator in `[lo, hi]` (continued
/// fraction descent).
pub fn simplest_rational(lo: &Rational, hi: &Rational) -> Rational {
    let (lo, hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    if hi.is_negative() {
        return -simplest_rational(&-hi, &-lo);
    }
    if !lo.is_positive() {
        return Rational::zero();
    }
    let c = lo.ceil();
    if &c <= hi {
        return c;
    }
    let f = lo.floor();
    let inner = simplest_rational(&(hi - &f).recip(), &(lo - &f).recip());
    f + inner.recip()
}

/// Parses `"p/q"`, an integer, or a decimal literal into an exact rational.
pub fn parse_rational(text: &str) -> Option<Rational> {
    let text = text.trim();
    if let Some((n, d)) = text.split_once('/') {
        let n = BigInt::from_str_radix(n.trim(), 10).ok()?;
        let d = BigInt::from_str_radix(d.trim(), 10).ok()?;
        if d.is_zero() {
            return None;
        }
        return Some(Rational::new(n, d));
    }
    if let Ok(n) = BigInt::from_str_radix(text, 10) {
        return Some(Rational::from_integer(n));
    }
    // decimal literal with optional exponent
    let (mantissa, exponent) = match text.find(['e', 'E']) {
        Some(i) => (&text[..i], text[i + 1..].parse::<i64>().ok()?),
        None => (text, 0),
    };
    let negative = mantissa.starts_with('-');
    let mantissa = mantissa.trim_start_matches(['-', '+']);
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let mut value = Rational::from_integer(BigInt::from_str_radix(&digits, 10).ok()?);
    let scale = exponent - frac_part.len() as i64;
    let ten = Rational::from_integer(BigInt::from(10));
    let factor = num_traits::pow(ten, scale.unsigned_abs() as usize);
    if scale >= 0 {
        value *= factor;
    } else {
        value /= factor;
    }
    if negative {
        value = -value;
    }
    Some(value)
}

/// Converts between backends, exactly whenever the target is exact.
pub fn convert<A: Scalar, B: Scalar>(v: &A) -> B {
    B::from_rational(&v.to_rational())
}
