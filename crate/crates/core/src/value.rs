//! Query values and exact rational helpers.
//!
//! Every query answer is a complex number. Rational-valued catalog data stays
//! exact (`Value::Exact`); transcendental evaluations fall back to doubles.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_complex::{Complex, Complex64};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Serialize, Serializer};

use crate::error::{Result, SciError};

pub type Rational = BigRational;

/// Builds `n/d` as an exact rational. Panics on `d == 0`.
pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// `2^e` for a possibly negative exponent.
pub fn pow2(e: i64) -> Rational {
    let p = BigInt::one() << (e.unsigned_abs() as usize);
    if e >= 0 {
        Rational::from_integer(p)
    } else {
        Rational::new(BigInt::one(), p)
    }
}

pub fn to_f64(q: &Rational) -> f64 {
    q.to_f64().unwrap_or_else(|| {
        // Huge numerators/denominators: scale down through the bit lengths.
        let n = q.numer().bits() as i64;
        let d = q.denom().bits() as i64;
        let shift = n.max(d) - 60;
        let scaled = q / pow2(shift.max(0));
        scaled.to_f64().unwrap_or(f64::NAN) * 2f64.powi(shift.max(0) as i32)
    })
}

/// Parses `"3"`, `"-1/4"` or a finite decimal such as `"0.125"` into an exact rational.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let t = s.trim();
    let bad = || SciError::Usage(format!("cannot parse `{s}` as a rational number"));
    if t.is_empty() {
        return Err(bad());
    }
    if let Some((n, d)) = t.split_once('/') {
        let n = BigInt::from_str(n.trim()).map_err(|_| bad())?;
        let d = BigInt::from_str(d.trim()).map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(Rational::new(n, d));
    }
    if let Some((whole, frac)) = t.split_once('.') {
        let neg = whole.starts_with('-');
        let digits = format!("{}{}", whole.trim_start_matches(['-', '+']), frac);
        if digits.is_empty() || !digits.chars().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let n = BigInt::from_str(&digits).map_err(|_| bad())?;
        let d = num_traits::pow(BigInt::from(10), frac.len());
        let q = Rational::new(n, d);
        return Ok(if neg { -q } else { q });
    }
    BigInt::from_str(t).map(Rational::from_integer).map_err(|_| bad())
}

pub fn parse_rational_list(s: &str) -> Result<Vec<Rational>> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(',').map(parse_rational).collect()
}

pub fn floor(q: &Rational) -> BigInt {
    q.numer().div_floor(q.denom())
}

pub fn ceil(q: &Rational) -> BigInt {
    -((-q.numer()).div_floor(q.denom()))
}

pub fn abs(q: &Rational) -> Rational {
    q.abs()
}

/// A complex query value, exact when the data permits.
#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Exact(Complex<Rational>),
    Approx(Complex64),
}

impl Value {
    pub fn real(q: Rational) -> Self {
        Value::Exact(Complex::new(q, Rational::zero()))
    }

    pub fn int(n: i64) -> Self {
        Value::real(int(n))
    }

    pub fn zero() -> Self {
        Value::int(0)
    }

    pub fn approx(x: f64) -> Self {
        Value::Approx(Complex64::new(x, 0.0))
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Value::Exact(_))
    }

    pub fn to_complex64(&self) -> Complex64 {
        match self {
            Value::Exact(c) => Complex64::new(to_f64(&c.re), to_f64(&c.im)),
            Value::Approx(c) => *c,
        }
    }

    pub fn re_f64(&self) -> f64 {
        self.to_complex64().re
    }

    /// The exact real part, if the value is exact and real.
    pub fn as_rational(&self) -> Option<&Rational> {
        match self {
            Value::Exact(c) if c.im.is_zero() => Some(&c.re),
            _ => None,
        }
    }

    /// Exact non-negative integer value, if any.
    pub fn as_index(&self) -> Option<usize> {
        let q = self.as_rational()?;
        if q.is_integer() && !q.is_negative() {
            q.to_integer().to_usize()
        } else {
            None
        }
    }

    pub fn add(&self, other: &Value) -> Value {
        match (self, other) {
            (Value::Exact(a), Value::Exact(b)) => Value::Exact(a + b),
            _ => Value::Approx(self.to_complex64() + other.to_complex64()),
        }
    }

    pub fn mul(&self, other: &Value) -> Value {
        match (self, other) {
            (Value::Exact(a), Value::Exact(b)) => Value::Exact(a * b),
            _ => Value::Approx(self.to_complex64() * other.to_complex64()),
        }
    }

    pub fn scale(&self, q: &Rational) -> Value {
        match self {
            Value::Exact(c) => Value::Exact(Complex::new(&c.re * q, &c.im * q)),
            Value::Approx(c) => Value::Approx(c * to_f64(q)),
        }
    }

    pub fn abs_diff(&self, other: &Value) -> f64 {
        match (self, other) {
            (Value::Exact(a), Value::Exact(b)) => {
                let d = a - b;
                if d.im.is_zero() {
                    to_f64(&d.re.abs())
                } else {
                    Complex64::new(to_f64(&d.re), to_f64(&d.im)).norm()
                }
            }
            _ => (self.to_complex64() - other.to_complex64()).norm(),
        }
    }

    /// Exact equality when both sides are exact, `|a - b| <= tol` otherwise.
    pub fn agrees(&self, other: &Value, tol: f64) -> bool {
        match (self, other) {
            (Value::Exact(a), Value::Exact(b)) => a == b,
            _ => self.abs_diff(other) <= tol,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Exact(c) if c.im.is_zero() => write!(f, "{}", c.re),
            Value::Exact(c) => write!(f, "{}+{}i", c.re, c.im),
            Value::Approx(c) if c.im == 0.0 => write!(f, "{}", c.re),
            Value::Approx(c) => write!(f, "{}+{}i", c.re, c.im),
        }
    }
}

impl Serialize for Value {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Value::Exact(c) if c.im.is_zero() => s.serialize_str(&c.re.to_string()),
            Value::Exact(c) => (c.re.to_string(), c.im.to_string()).serialize(s),
            Value::Approx(c) if c.im == 0.0 => s.serialize_f64(c.re),
            Value::Approx(c) => (c.re, c.im).serialize(s),
        }
    }
}

/// Serde adapters that write rationals as `"p/q"` strings and read strings or numbers.
pub mod serde_rational {
    use super::*;
    use serde::de::{self, Deserializer};
    use serde::Deserialize;

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Str(String),
        Int(i64),
        Float(f64),
    }

    fn from_raw<E: de::Error>(raw: Raw) -> std::result::Result<Rational, E> {
        match raw {
            Raw::Str(s) => parse_rational(&s).map_err(E::custom),
            Raw::Int(i) => Ok(int(i)),
            Raw::Float(x) => Rational::from_float(x)
                .ok_or_else(|| E::custom("non-finite number where a rational was expected")),
        }
    }

    pub fn serialize<S: Serializer>(q: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&q.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Rational, D::Error> {
        from_raw(Raw::deserialize(d)?)
    }

    pub mod vec {
        use super::*;

        pub fn serialize<S: Serializer>(
            v: &[Rational],
            s: S,
        ) -> std::result::Result<S::Ok, S::Error> {
            v.iter().map(|q| q.to_string()).collect::<Vec<_>>().serialize(s)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(
            d: D,
        ) -> std::result::Result<Vec<Rational>, D::Error> {
            Vec::<Raw>::deserialize(d)?.into_iter().map(from_raw).collect()
        }
    }
}
