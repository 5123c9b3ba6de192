//! Exact and floating scalars shared by every module.
//!
//! Exact values are `BigRational`; floating values are `f64`. [`Value`] carries
//! either, and [`Scalar`] lets table arithmetic be written once for both.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, One, Signed, ToPrimitive, Zero};

pub type Rational = BigRational;

/// `n/d` as an exact rational.
pub fn q(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn qi(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn rational_to_f64(r: &Rational) -> f64 {
    ToPrimitive::to_f64(r).unwrap_or_else(|| {
        // numerator/denominator too large for a direct conversion
        let n = r.numer().to_f64().unwrap_or(f64::NAN);
        let d = r.denom().to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

/// Formats as `num/den`, or a bare integer when the denominator is one.
pub fn format_rational(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Parses `num/den`, an integer, or a finite decimal such as `0.75` or `-1e-2`
/// into an exact rational.
pub fn parse_rational(s: &str) -> Option<Rational> {
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n = BigInt::from_str(n.trim()).ok()?;
        let d = BigInt::from_str(d.trim()).ok()?;
        if d.is_zero() {
            return None;
        }
        return Some(Rational::new(n, d));
    }
    if let Ok(n) = BigInt::from_str(s) {
        return Some(Rational::from_integer(n));
    }
    parse_decimal(s)
}

fn parse_decimal(s: &str) -> Option<Rational> {
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (neg, mantissa) = match mantissa.strip_prefix('-') {
        Some(m) => (true, m),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int, frac) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int.is_empty() && frac.is_empty() {
        return None;
    }
    if !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{int}{frac}");
    let mut num = BigInt::from_str(if digits.is_empty() { "0" } else { &digits }).ok()?;
    if neg {
        num = -num;
    }
    let scale = exp - frac.len() as i32;
    let ten = BigInt::from(10);
    let r = if scale >= 0 {
        Rational::from_integer(num * num_traits::pow(ten, scale as usize))
    } else {
        Rational::new(num, num_traits::pow(ten, (-scale) as usize))
    };
    Some(r)
}

/// Whether a behavior, functional, or program carries exact or floating data.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Arithmetic {
    Exact,
    Float,
}

impl fmt::Display for Arithmetic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Arithmetic::Exact => f.write_str("exact"),
            Arithmetic::Float => f.write_str("float"),
        }
    }
}

/// A scalar result that is exact when every operand was exact.
#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Exact(Rational),
    Float(f64),
}

impl Value {
    pub fn to_f64(&self) -> f64 {
        match self {
            Value::Exact(r) => rational_to_f64(r),
            Value::Float(x) => *x,
        }
    }

    pub fn as_exact(&self) -> Option<&Rational> {
        match self {
            Value::Exact(r) => Some(r),
            Value::Float(_) => None,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Value::Exact(_))
    }

    pub fn int(n: i64) -> Self {
        Value::Exact(qi(n))
    }

    pub fn ratio(n: i64, d: i64) -> Self {
        Value::Exact(q(n, d))
    }

    /// Parses exact rational or decimal notation; anything else that parses
    /// as a float (e.g. `inf`) is rejected.
    pub fn parse(s: &str) -> Option<Self> {
        parse_rational(s).map(Value::Exact)
    }

    pub fn abs_diff(&self, other: &Value) -> Value {
        match (self, other) {
            (Value::Exact(a), Value::Exact(b)) => Value::Exact((a - b).abs()),
            _ => Value::Float((self.to_f64() - other.to_f64()).abs()),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Exact(r) => f.write_str(&format_rational(r)),
            Value::Float(x) => write!(f, "{x}"),
        }
    }
}

impl From<f64> for Value {
    fn from(x: f64) -> Self {
        Value::Float(x)
    }
}

impl From<Rational> for Value {
    fn from(r: Rational) -> Self {
        Value::Exact(r)
    }
}

/// Arithmetic shared by exact and floating tables.
pub trait Scalar: Clone + fmt::Debug + PartialOrd + Num + Signed + Send + Sync + 'static {
    const ARITHMETIC: Arithmetic;

    fn from_i64(n: i64) -> Self;
    /// Exact conversion for `Rational`; rounding for `f64`.
    fn from_rational(r: &Rational) -> Self;
    /// Exact binary expansion for `Rational`.
    fn from_float(x: f64) -> Self;
    fn from_value(v: &Value) -> Self {
        match v {
            Value::Exact(r) => Self::from_rational(r),
            Value::Float(x) => Self::from_float(*x),
        }
    }
    fn approx(&self) -> f64;
    fn into_value(self) -> Value;
    /// Zero test; floating values use an absolute tolerance.
    fn near_zero(&self, tol: f64) -> bool;
}

impl Scalar for Rational {
    const ARITHMETIC: Arithmetic = Arithmetic::Exact;

    fn from_i64(n: i64) -> Self {
        qi(n)
    }
    fn from_rational(r: &Rational) -> Self {
        r.clone()
    }
    fn from_float(x: f64) -> Self {
        <Rational as FromPrimitive>::from_f64(x).unwrap_or_else(Rational::zero)
    }
    fn approx(&self) -> f64 {
        rational_to_f64(self)
    }
    fn into_value(self) -> Value {
        Value::Exact(self)
    }
    fn near_zero(&self, _tol: f64) -> bool {
        self.is_zero()
    }
}

impl Scalar for f64 {
    const ARITHMETIC: Arithmetic = Arithmetic::Float;

    fn from_i64(n: i64) -> Self {
        n as f64
    }
    fn from_rational(r: &Rational) -> Self {
        rational_to_f64(r)
    }
    fn from_float(x: f64) -> Self {
        x
    }
    fn approx(&self) -> f64 {
        *self
    }
    fn into_value(self) -> Value {
        Value::Float(self)
    }
    fn near_zero(&self, tol: f64) -> bool {
        self.abs() <= tol
    }
}

/// Flat probability or coefficient storage in one arithmetic mode.
#[derive(Clone, Debug, PartialEq)]
pub enum Tensor {
    Exact(Vec<Rational>),
    Float(Vec<f64>),
}

impl Tensor {
    pub fn len(&self) -> usize {
        match self {
            Tensor::Exact(v) => v.len(),
            Tensor::Float(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn arithmetic(&self) -> Arithmetic {
        match self {
            Tensor::Exact(_) => Arithmetic::Exact,
            Tensor::Float(_) => Arithmetic::Float,
        }
    }

    pub fn get(&self, i: usize) -> Value {
        match self {
            Tensor::Exact(v) => Value::Exact(v[i].clone()),
            Tensor::Float(v) => Value::Float(v[i]),
        }
    }

    pub fn to_f64_vec(&self) -> Vec<f64> {
        match self {
            Tensor::Exact(v) => v.iter().map(rational_to_f64).collect(),
            Tensor::Float(v) => v.clone(),
        }
    }

    pub fn to_float(&self) -> Tensor {
        Tensor::Float(self.to_f64_vec())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fractions_integers_and_decimals() {
        assert_eq!(parse_rational("3/12"), Some(q(1, 4)));
        assert_eq!(parse_rational("-7"), Some(qi(-7)));
        assert_eq!(parse_rational("0.75"), Some(q(3, 4)));
        assert_eq!(parse_rational("-1.5e1"), Some(qi(-15)));
        assert_eq!(parse_rational(".5"), Some(q(1, 2)));
        assert_eq!(parse_rational("1/0"), None);
        assert_eq!(parse_rational("abc"), None);
        assert_eq!(parse_rational("."), None);
    }

    #[test]
    fn formats_integers_without_denominator() {
        assert_eq!(format_rational(&qi(8)), "8");
        assert_eq!(format_rational(&q(-2, 8)), "-1/4");
    }

    #[test]
    fn float_to_rational_is_exact() {
        let r = <Rational as Scalar>::from_float(0.1);
        assert_eq!(rational_to_f64(&r), 0.1);
        assert_ne!(r, q(1, 10));
    }
}
