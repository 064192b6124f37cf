//! Scalar abstractions shared by the symbolic and numeric layers.
//!
//! Symbolic work runs over [`Rational`]; numerical integration and quadrature
//! run over `f32`/`f64`. Polynomials, vector fields and jets are generic over
//! [`Scalar`], so the same code evaluates exactly or in floating point.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::Error;

/// Exact rational number in lowest terms with positive denominator.
pub type Rational = BigRational;

/// A commutative ring that can absorb rational constants.
pub trait Scalar:
    Clone
    + Debug
    + PartialEq
    + Zero
    + One
    + Neg<Output = Self>
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Send
    + Sync
{
    fn from_rational(q: &Rational) -> Self;

    fn from_i64(n: i64) -> Self {
        Self::from_rational(&Rational::from_integer(BigInt::from(n)))
    }
}

/// A [`Scalar`] with division.
pub trait Field: Scalar + Div<Output = Self> {}

/// A field with a total order compatible with its arithmetic (used by the simplex solver).
pub trait OrderedField: Field + PartialOrd {}

impl Scalar for Rational {
    fn from_rational(q: &Rational) -> Self {
        q.clone()
    }
}
impl Field for Rational {}
impl OrderedField for Rational {}

impl Scalar for f64 {
    fn from_rational(q: &Rational) -> Self {
        q.to_f64().unwrap_or(f64::NAN)
    }
    fn from_i64(n: i64) -> Self {
        n as f64
    }
}
impl Field for f64 {}
impl OrderedField for f64 {}

impl Scalar for f32 {
    fn from_rational(q: &Rational) -> Self {
        q.to_f32().unwrap_or(f32::NAN)
    }
    fn from_i64(n: i64) -> Self {
        n as f32
    }
}
impl Field for f32 {}
impl OrderedField for f32 {}

pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn factorial(n: u32) -> Rational {
    let mut acc = BigInt::one();
    for i in 2..=n {
        acc *= i;
    }
    Rational::from_integer(acc)
}

pub fn to_f64(q: &Rational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

/// Parses `"n"` or `"n/d"` with arbitrary-precision integers. Decimal and
/// exponent notation are rejected so that every rational is entered exactly.
pub fn parse_rational(text: &str) -> Result<Rational, Error> {
    let s = text.trim();
    let bad = || Error::Parse(format!("`{text}` is not an integer fraction"));
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let is_int = |t: &str| {
        let digits = t.strip_prefix(['-', '+']).unwrap_or(t);
        !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit())
    };
    if !is_int(num) || !is_int(den) {
        return Err(bad());
    }
    let n = BigInt::from_str(num).map_err(|_| bad())?;
    let d = BigInt::from_str(den).map_err(|_| bad())?;
    if d.is_zero() {
        return Err(Error::Parse(format!("`{text}` has zero denominator")));
    }
    Ok(Rational::new(n, d))
}

/// Always `num/den`, including integers (`3/1`).
pub fn format_rational(q: &Rational) -> String {
    format!("{}/{}", q.numer(), q.denom())
}

pub fn abs(q: &Rational) -> Rational {
    q.abs()
}

pub fn dot(a: &[Rational], b: &[Rational]) -> Rational {
    a.iter().zip(b).fold(Rational::zero(), |acc, (x, y)| acc + x * y)
}

pub fn dot_int(a: &[Rational], b: &[u32]) -> Rational {
    a.iter()
        .zip(b)
        .fold(Rational::zero(), |acc, (x, &y)| acc + x * int(y as i64))
}

pub fn ceil_to_u64(q: &Rational) -> u64 {
    q.ceil().to_integer().to_u64().expect("nonnegative bound that fits in u64")
}
