//! Exact rational helpers shared by every module.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use dashu_float::{round::mode::HalfEven, FBig};
use dashu_int::IBig;

use crate::error::{Error, Result};

pub type Rational = num_rational::BigRational;

pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Parses `"p/q"`, an integer, or a decimal such as `"0.05"` / `"1e-3"`
/// into an exact rational. Decimals never pass through binary floats.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || Error::invalid(format!("cannot parse {s:?} as a rational number"));
    if s.is_empty() {
        return Err(bad());
    }
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| bad())?;
        let q: BigInt = q.trim().parse().map_err(|_| bad())?;
        if q.is_zero() {
            return Err(Error::invalid(format!("zero denominator in {s:?}")));
        }
        return Ok(Rational::new(p, q));
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (negative, mantissa) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (whole, frac) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if whole.is_empty() && frac.is_empty() {
        return Err(bad());
    }
    if !whole.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let digits: BigInt = format!("{whole}{frac}0").parse().map_err(|_| bad())?;
    let digits = digits / 10;
    let scale = exponent - frac.len() as i32;
    let ten = BigInt::from(10);
    let mut value = if scale >= 0 {
        Rational::from_integer(digits * num_traits::pow(ten, scale as usize))
    } else {
        Rational::new(digits, num_traits::pow(ten, (-scale) as usize))
    };
    if negative {
        value = -value;
    }
    Ok(value)
}

pub fn to_f64(x: &Rational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// `⌊x⌋` as an integer; `None` when it does not fit.
pub fn floor_u64(x: &Rational) -> Option<u64> {
    x.floor().to_integer().to_u64()
}

pub fn ceil_u64(x: &Rational) -> Option<u64> {
    x.ceil().to_integer().to_u64()
}

pub fn is_positive(x: &Rational) -> bool {
    x.is_positive()
}

/// Numerator and denominator as decimal strings, denominator positive.
pub fn num_den_strings(x: &Rational) -> (String, String) {
    (x.numer().to_string(), x.denom().to_string())
}

pub fn from_num_den_strings(num: &str, den: &str) -> Result<Rational> {
    let n: BigInt = num
        .parse()
        .map_err(|_| Error::invalid(format!("bad numerator {num:?}")))?;
    let d: BigInt = den
        .parse()
        .map_err(|_| Error::invalid(format!("bad denominator {den:?}")))?;
    if d.is_zero() {
        return Err(Error::invalid("zero denominator"));
    }
    Ok(Rational::new(n, d))
}

/// Serde adapter writing a rational as `{"num": "...", "den": "..."}`.
pub mod frac {
    use super::*;
    use serde::{Deserializer, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Repr {
        num: String,
        den: String,
    }

    pub fn serialize<S: Serializer>(x: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
        let (num, den) = num_den_strings(x);
        Repr { num, den }.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Rational, D::Error> {
        let r = Repr::deserialize(d)?;
        from_num_den_strings(&r.num, &r.den).map_err(serde::de::Error::custom)
    }
}

/// Binary floating point with a 128-bit mantissa.
pub type Real = FBig<HalfEven, 2>;

pub const REAL_PRECISION: usize = 128;

pub fn real(x: f64) -> Real {
    Real::try_from(x).expect("finite float").with_precision(REAL_PRECISION).value()
}

fn big_to_real(n: &BigInt) -> Real {
    let i: IBig = n.to_string().parse().expect("decimal integer");
    Real::from(i).with_precision(REAL_PRECISION).value()
}

/// Natural log of a positive integer at [`REAL_PRECISION`] bits.
pub fn ln_int(n: u64) -> Real {
    debug_assert!(n > 0);
    Real::from(n).with_precision(REAL_PRECISION).value().ln()
}

/// Natural log of a positive rational at [`REAL_PRECISION`] bits.
pub fn ln_rational(x: &Rational) -> Real {
    debug_assert!(x.is_positive());
    big_to_real(x.numer()).ln() - big_to_real(x.denom()).ln()
}

pub fn real_to_f64(x: &Real) -> f64 {
    x.to_f64().value()
}

pub fn lcm(a: &BigInt, b: &BigInt) -> BigInt {
    a.lcm(b)
}

pub fn one() -> Rational {
    Rational::one()
}

pub fn zero() -> Rational {
    Rational::zero()
}
