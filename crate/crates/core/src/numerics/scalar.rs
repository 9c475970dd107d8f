use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::Interval;
use crate::error::{Error, Result};

/// A real number held either exactly (reduced rational) or as a certified
/// enclosure. Mixing the two degrades to an enclosure.
#[derive(Clone, Debug, PartialEq)]
pub enum Scalar {
    Exact(BigRational),
    Approx(Interval),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScalarMode {
    Exact,
    Interval,
}

pub fn rational(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Exact square root of a nonnegative rational, when it is one.
pub fn rational_sqrt(r: &BigRational) -> Option<BigRational> {
    if r.is_negative() {
        return None;
    }
    let n = r.numer();
    let d = r.denom();
    let sn = n.sqrt();
    let sd = d.sqrt();
    if &(&sn * &sn) == n && &(&sd * &sd) == d {
        Some(BigRational::new(sn, sd))
    } else {
        None
    }
}

impl Scalar {
    pub fn zero() -> Self {
        Scalar::Exact(BigRational::zero())
    }

    pub fn one() -> Self {
        Scalar::Exact(BigRational::one())
    }

    pub fn int(n: i64) -> Self {
        Scalar::Exact(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn ratio(n: i64, d: i64) -> Self {
        Scalar::Exact(rational(n, d))
    }

    /// A float taken as an exact point of interval mode.
    pub fn float(x: f64) -> Self {
        Scalar::Approx(Interval::point(x))
    }

    pub fn mode(&self) -> ScalarMode {
        match self {
            Scalar::Exact(_) => ScalarMode::Exact,
            Scalar::Approx(_) => ScalarMode::Interval,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Scalar::Exact(_))
    }

    pub fn exact(&self) -> Option<&BigRational> {
        match self {
            Scalar::Exact(r) => Some(r),
            Scalar::Approx(_) => None,
        }
    }

    pub fn to_interval(&self) -> Interval {
        match self {
            Scalar::Exact(r) => Interval::from_rational(r),
            Scalar::Approx(i) => *i,
        }
    }

    /// Midpoint value, for reporting and heuristics only.
    pub fn to_f64(&self) -> f64 {
        match self {
            Scalar::Exact(r) => r.to_f64().unwrap_or(f64::NAN),
            Scalar::Approx(i) => i.mid(),
        }
    }

    /// Sign when it is certain.
    pub fn sign(&self) -> Option<Ordering> {
        match self {
            Scalar::Exact(r) => Some(r.cmp(&BigRational::zero())),
            Scalar::Approx(i) => {
                if i.is_strictly_positive() {
                    Some(Ordering::Greater)
                } else if i.is_strictly_negative() {
                    Some(Ordering::Less)
                } else if i.is_point() && i.lo() == 0.0 {
                    Some(Ordering::Equal)
                } else {
                    None
                }
            }
        }
    }

    /// True when the value is certainly zero.
    pub fn is_zero_certain(&self) -> bool {
        self.sign() == Some(Ordering::Equal)
    }

    /// True when zero cannot be excluded.
    pub fn may_be_zero(&self) -> bool {
        match self {
            Scalar::Exact(r) => r.is_zero(),
            Scalar::Approx(i) => i.contains_zero(),
        }
    }

    /// Comparison when certain.
    pub fn cmp_certain(&self, other: &Scalar) -> Option<Ordering> {
        (self - other).sign()
    }

    pub fn abs(&self) -> Scalar {
        match self {
            Scalar::Exact(r) => Scalar::Exact(r.abs()),
            Scalar::Approx(i) => Scalar::Approx(i.abs()),
        }
    }

    /// Square root: exact for rational squares, an enclosure otherwise.
    pub fn sqrt(&self) -> Scalar {
        if let Scalar::Exact(r) = self {
            if let Some(s) = rational_sqrt(r) {
                return Scalar::Exact(s);
            }
        }
        Scalar::Approx(self.to_interval().sqrt())
    }

    pub fn recip(&self) -> Result<Scalar> {
        Scalar::one().checked_div(self)
    }

    pub fn checked_div(&self, other: &Scalar) -> Result<Scalar> {
        if other.may_be_zero() {
            return Err(Error::Domain(format!("division by {other}")));
        }
        Ok(self / other)
    }

    /// Integer power (negative exponents allowed for nonzero values).
    pub fn powi(&self, n: i32) -> Scalar {
        match self {
            Scalar::Exact(r) => Scalar::Exact(num_traits::pow::Pow::pow(r, n)),
            Scalar::Approx(i) => {
                let p = i.powi(n.unsigned_abs());
                Scalar::Approx(if n < 0 { p.recip() } else { p })
            }
        }
    }

    pub fn ln(&self) -> Interval {
        self.to_interval().ln()
    }

    /// Exact equality (both exact and equal), never true for enclosures.
    pub fn exact_eq(&self, other: &Scalar) -> bool {
        matches!((self, other), (Scalar::Exact(a), Scalar::Exact(b)) if a == b)
    }

    /// Equality when certain: `Some(true)` exact match, `Some(false)` when the
    /// enclosures are disjoint, `None` otherwise.
    pub fn eq_certain(&self, other: &Scalar) -> Option<bool> {
        match (self, other) {
            (Scalar::Exact(a), Scalar::Exact(b)) => Some(a == b),
            _ => {
                if self.to_interval().intersects(&other.to_interval()) {
                    None
                } else {
                    Some(false)
                }
            }
        }
    }
}

impl Default for Scalar {
    fn default() -> Self {
        Scalar::zero()
    }
}

impl From<BigRational> for Scalar {
    fn from(r: BigRational) -> Self {
        Scalar::Exact(r)
    }
}

impl From<Interval> for Scalar {
    fn from(i: Interval) -> Self {
        Scalar::Approx(i)
    }
}

impl From<i64> for Scalar {
    fn from(n: i64) -> Self {
        Scalar::int(n)
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Exact(r) => {
                if r.is_integer() {
                    write!(f, "{}", r.numer())
                } else {
                    write!(f, "{}/{}", r.numer(), r.denom())
                }
            }
            Scalar::Approx(i) => write!(f, "{i}"),
        }
    }
}

/// Parses `"2/3"`, `"-5"`, or a decimal like `"0.125"` as an exact rational.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = || Error::Parse(format!("not a rational number: {s:?}"));
    if let Some((n, d)) = s.split_once('/') {
        let n = BigInt::from_str(n.trim()).map_err(|_| bad())?;
        let d = BigInt::from_str(d.trim()).map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(n, d));
    }
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let (ip, fp) = body.split_once('.').unwrap_or((body, ""));
    if ip.is_empty() && fp.is_empty() || !ip.chars().chain(fp.chars()).all(|c| c.is_ascii_digit())
    {
        return Err(bad());
    }
    let digits = format!("{ip}{fp}");
    let n = BigInt::from_str(if digits.is_empty() { "0" } else { &digits }).map_err(|_| bad())?;
    let d = num_traits::pow(BigInt::from(10), fp.len());
    let r = BigRational::new(n, d);
    Ok(if neg { -r } else { r })
}

impl FromStr for Scalar {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        parse_rational(s).map(Scalar::Exact)
    }
}

impl Serialize for Scalar {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Scalar::Exact(_) => serializer.serialize_str(&self.to_string()),
            Scalar::Approx(i) if i.is_point() => serializer.serialize_f64(i.lo()),
            Scalar::Approx(i) => [i.lo(), i.hi()].serialize(serializer),
        }
    }
}

impl<'de> Deserialize<'de> for Scalar {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct ScalarVisitor;
        impl<'de> Visitor<'de> for ScalarVisitor {
            type Value = Scalar;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a rational string, a float, or a [lo, hi] pair")
            }
            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Scalar, E> {
                v.parse().map_err(E::custom)
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Scalar, E> {
                Ok(Scalar::float(v))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Scalar, E> {
                Ok(Scalar::float(v as f64))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Scalar, E> {
                Ok(Scalar::float(v as f64))
            }
            fn visit_seq<A: de::SeqAccess<'de>>(self, mut seq: A) -> std::result::Result<Scalar, A::Error> {
                let lo: f64 = seq.next_element()?.ok_or_else(|| de::Error::invalid_length(0, &self))?;
                let hi: f64 = seq.next_element()?.ok_or_else(|| de::Error::invalid_length(1, &self))?;
                if !(lo <= hi) {
                    return Err(de::Error::custom("interval with lo > hi"));
                }
                Ok(Scalar::Approx(Interval::new(lo, hi)))
            }
        }
        deserializer.deserialize_any(ScalarVisitor)
    }
}

macro_rules! scalar_binop {
    ($tr:ident, $method:ident, $op:tt) => {
        impl $tr<&Scalar> for &Scalar {
            type Output = Scalar;
            fn $method(self, rhs: &Scalar) -> Scalar {
                match (self, rhs) {
                    (Scalar::Exact(a), Scalar::Exact(b)) => Scalar::Exact(a $op b),
                    _ => Scalar::Approx(self.to_interval() $op rhs.to_interval()),
                }
            }
        }
        impl $tr<Scalar> for Scalar {
            type Output = Scalar;
            fn $method(self, rhs: Scalar) -> Scalar {
                &self $op &rhs
            }
        }
        impl $tr<&Scalar> for Scalar {
            type Output = Scalar;
            fn $method(self, rhs: &Scalar) -> Scalar {
                &self $op rhs
            }
        }
        impl $tr<Scalar> for &Scalar {
            type Output = Scalar;
            fn $method(self, rhs: Scalar) -> Scalar {
                self $op &rhs
            }
        }
    };
}

scalar_binop!(Add, add, +);
scalar_binop!(Sub, sub, -);
scalar_binop!(Mul, mul, *);

impl Div<&Scalar> for &Scalar {
    type Output = Scalar;
    /// Exact division panics on a zero divisor; enclosures containing zero
    /// produce the whole line.
    fn div(self, rhs: &Scalar) -> Scalar {
        match (self, rhs) {
            (Scalar::Exact(a), Scalar::Exact(b)) => Scalar::Exact(a / b),
            _ => Scalar::Approx(self.to_interval() / rhs.to_interval()),
        }
    }
}

impl Div<Scalar> for Scalar {
    type Output = Scalar;
    fn div(self, rhs: Scalar) -> Scalar {
        &self / &rhs
    }
}

impl Neg for &Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        match self {
            Scalar::Exact(a) => Scalar::Exact(-a),
            Scalar::Approx(i) => Scalar::Approx(-*i),
        }
    }
}

impl Neg for Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        -&self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_forms() {
        assert_eq!("2/3".parse::<Scalar>().unwrap(), Scalar::ratio(2, 3));
        assert_eq!("-4/6".parse::<Scalar>().unwrap(), Scalar::ratio(-2, 3));
        assert_eq!("0.125".parse::<Scalar>().unwrap(), Scalar::ratio(1, 8));
        assert_eq!("7".parse::<Scalar>().unwrap(), Scalar::int(7));
        assert!("1/0".parse::<Scalar>().is_err());
        assert!("abc".parse::<Scalar>().is_err());
    }

    #[test]
    fn mixing_degrades_to_interval() {
        let a = Scalar::ratio(1, 3);
        let b = Scalar::float(0.5);
        let c = &a + &b;
        assert!(!c.is_exact());
        assert!(c.to_interval().contains(5.0 / 6.0));
    }

    #[test]
    fn sqrt_exact_when_square() {
        assert_eq!(Scalar::ratio(9, 16).sqrt(), Scalar::ratio(3, 4));
        assert!(!Scalar::int(2).sqrt().is_exact());
    }

    #[test]
    fn serde_round_trip() {
        let v = vec![Scalar::ratio(2, 3), Scalar::float(0.25), Scalar::Approx(Interval::new(0.1, 0.2))];
        let s = serde_json::to_string(&v).unwrap();
        assert_eq!(s, r#"["2/3",0.25,[0.1,0.2]]"#);
        let back: Vec<Scalar> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, v);
    }

    #[test]
    fn certain_sign() {
        assert_eq!(Scalar::ratio(-1, 7).sign(), Some(Ordering::Less));
        assert_eq!(Scalar::Approx(Interval::new(-1e-20, 1e-20)).sign(), None);
        assert!(Scalar::Approx(Interval::new(-1e-20, 1e-20)).may_be_zero());
    }
}

/// Serde adapter storing a [`BigRational`] as a `"p/q"` string.
pub mod rational_str {
    use super::*;

    pub fn serialize<S: Serializer>(r: &BigRational, s: S) -> std::result::Result<S::Ok, S::Error> {
        Scalar::Exact(r.clone()).to_string().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<BigRational, D::Error> {
        let s = String::deserialize(d)?;
        parse_rational(&s).map_err(de::Error::custom)
    }
}
