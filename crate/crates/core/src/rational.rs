//! Exact rationals, their `"p/q"` text form, and certified enclosures for
//! fractional powers.

use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub type Rational = BigRational;

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn from_biguint(n: &BigUint) -> Rational {
    Rational::from_integer(BigInt::from(n.clone()))
}

/// 2^e for any integer e.
pub fn pow2(e: i64) -> Rational {
    if e >= 0 {
        Rational::from_integer(BigInt::one() << e as usize)
    } else {
        Rational::new(BigInt::one(), BigInt::one() << (-e) as usize)
    }
}

pub fn pow_int(x: &Rational, e: u32) -> Rational {
    num_traits::pow(x.clone(), e as usize)
}

/// Level of a dyadic rational: the least `l` with `x * 2^l` an integer.
pub fn dyadic_level(x: &Rational) -> Option<u32> {
    let den = x.denom();
    if den.is_zero() {
        return None;
    }
    let tz = den.trailing_zeros().unwrap_or(0);
    if (den >> tz as usize).is_one() {
        Some(tz as u32)
    } else {
        None
    }
}

pub fn is_dyadic(x: &Rational) -> bool {
    dyadic_level(x).is_some()
}

pub fn format(x: &Rational) -> String {
    format!("{}/{}", x.numer(), x.denom())
}

/// Parses `"p/q"`, integers and finite decimals such as `"1.5"`.
pub fn parse(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || Error::Parse(format!("not a rational: {s:?}"));
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| bad())?;
        let q: BigInt = q.trim().parse().map_err(|_| bad())?;
        if q.is_zero() {
            return Err(bad());
        }
        return Ok(Rational::new(p, q));
    }
    if let Some((whole, frac)) = s.split_once('.') {
        if frac.is_empty() || !frac.chars().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let neg = whole.starts_with('-');
        let w: BigInt =
            if whole.is_empty() || whole == "-" { BigInt::zero() } else { whole.parse().map_err(|_| bad())? };
        let f: BigInt = frac.parse().map_err(|_| bad())?;
        let scale = num_traits::pow(BigInt::from(10), frac.len());
        let mag = Rational::new(w.abs() * &scale + f, scale);
        return Ok(if neg { -mag } else { mag });
    }
    let n: BigInt = s.parse().map_err(|_| bad())?;
    Ok(Rational::from_integer(n))
}

pub fn to_f64(x: &Rational) -> f64 {
    if let Some(v) = x.to_f64() {
        if v.is_finite() && (v != 0.0 || x.is_zero()) {
            return v;
        }
    }
    ln(x).exp() * if x.is_negative() { -1.0 } else { 1.0 }
}

fn ln_uint(n: &BigInt) -> f64 {
    let bits = n.bits();
    if bits <= 1000 {
        return n.to_f64().unwrap().ln();
    }
    let shift = bits - 60;
    (n >> shift as usize).to_f64().unwrap().ln() + shift as f64 * std::f64::consts::LN_2
}

/// Natural log of |x| in floating point, valid far outside the f64 range.
pub fn ln(x: &Rational) -> f64 {
    ln_uint(&x.numer().abs()) - ln_uint(x.denom())
}

pub fn floor_log2(x: &Rational) -> i64 {
    debug_assert!(x.is_positive());
    let mut e = x.numer().bits() as i64 - x.denom().bits() as i64;
    while &pow2(e) > x {
        e -= 1;
    }
    while &pow2(e + 1) <= x {
        e += 1;
    }
    e
}

pub fn decimal(x: &Rational, digits: usize) -> String {
    format!("{:.*}", digits, to_f64(x))
}

/// Serde adapter writing a rational as `"p/q"`.
pub mod serde_rat {
    use super::*;

    pub fn serialize<S: Serializer>(x: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format(x))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Rational, D::Error> {
        let s = String::deserialize(d)?;
        parse(&s).map_err(serde::de::Error::custom)
    }
}

pub mod serde_rat_vec {
    use super::*;

    pub fn serialize<S: Serializer>(xs: &[Rational], s: S) -> std::result::Result<S::Ok, S::Error> {
        let v: Vec<String> = xs.iter().map(format).collect();
        v.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<Rational>, D::Error> {
        let v = Vec::<String>::deserialize(d)?;
        v.iter().map(|s| parse(s).map_err(serde::de::Error::custom)).collect()
    }
}

pub mod serde_big {
    use super::*;

    pub fn serialize<S: Serializer>(x: &BigUint, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&x.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<BigUint, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A closed interval `[lo, hi]` of rationals known to contain a real number.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Enclosure {
    #[serde(with = "serde_rat")]
    pub lo: Rational,
    #[serde(with = "serde_rat")]
    pub hi: Rational,
}

impl Enclosure {
    pub fn exact(x: Rational) -> Self {
        Enclosure { lo: x.clone(), hi: x }
    }

    pub fn is_exact(&self) -> bool {
        self.lo == self.hi
    }

    pub fn width(&self) -> Rational {
        &self.hi - &self.lo
    }

    pub fn mid(&self) -> f64 {
        (to_f64(&self.lo) + to_f64(&self.hi)) / 2.0
    }

    pub fn add(&self, o: &Enclosure) -> Enclosure {
        Enclosure { lo: &self.lo + &o.lo, hi: &self.hi + &o.hi }
    }

    /// Product of two enclosures of nonnegative numbers.
    pub fn mul_nonneg(&self, o: &Enclosure) -> Enclosure {
        Enclosure { lo: &self.lo * &o.lo, hi: &self.hi * &o.hi }
    }

    pub fn scale(&self, c: &Rational) -> Enclosure {
        if c.is_negative() {
            Enclosure { lo: &self.hi * c, hi: &self.lo * c }
        } else {
            Enclosure { lo: &self.lo * c, hi: &self.hi * c }
        }
    }

    /// Quotient of nonnegative by strictly positive enclosures.
    pub fn div_pos(&self, o: &Enclosure) -> Enclosure {
        Enclosure { lo: &self.lo / &o.hi, hi: &self.hi / &o.lo }
    }

    pub fn certainly_le(&self, x: &Rational) -> bool {
        &self.hi <= x
    }

    pub fn certainly_ge(&self, x: &Rational) -> bool {
        &self.lo >= x
    }

    pub fn contains(&self, x: &Rational) -> bool {
        &self.lo <= x && x <= &self.hi
    }
}

impl fmt::Display for Enclosure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_exact() {
            write!(f, "{}", format(&self.lo))
        } else {
            write!(f, "[{:.15}, {:.15}]", to_f64(&self.lo), to_f64(&self.hi))
        }
    }
}

/// Certified enclosure of `x^e` for `x ≥ 0` and rational `e > 0`; exact
/// when `e` is an integer. Width is at most `2^-44` relative to the value.
pub fn pow_enclosure(x: &Rational, e: &Rational) -> Enclosure {
    assert!(!x.is_negative(), "negative base");
    assert!(e.is_positive(), "exponent must be positive");
    if x.is_zero() || x.is_one() {
        return Enclosure::exact(x.clone());
    }
    let a = e.numer().to_u32().expect("exponent numerator too large");
    let b = e.denom().to_u32().expect("exponent denominator too large");
    if b == 1 {
        return Enclosure::exact(pow_int(x, a));
    }
    // y = x^(a/b) satisfies y^b = x^a; bracket y by dyadic rationals.
    let target = pow_int(x, a);
    let approx = ln(x) * a as f64 / b as f64;
    let exp2 = (approx / std::f64::consts::LN_2).floor() as i64;
    let step = pow2(exp2 - 44);
    let guess = approx.exp() / 2f64.powi((exp2 - 44) as i32);
    let mut lo = if guess.is_finite() {
        &step * Rational::from_integer(BigInt::from(guess.floor() as i128))
    } else {
        pow2(exp2)
    };
    let mut hi = &lo + &step;
    let mut widen = step.clone();
    while lo.is_positive() && pow_int(&lo, b) > target {
        lo -= &widen;
        widen = &widen * int(2);
    }
    if lo.is_negative() {
        lo = Rational::zero();
    }
    let mut widen = step;
    while pow_int(&hi, b) < target {
        hi += &widen;
        widen = &widen * int(2);
    }
    Enclosure { lo, hi }
}

/// Enclosure of `x^(1/p)`.
pub fn root_enclosure(x: &Rational, p: &Rational) -> Enclosure {
    pow_enclosure(x, &(Rational::one() / p))
}
