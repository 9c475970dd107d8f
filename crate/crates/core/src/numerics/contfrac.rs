//! Continued fractions: convergents, rational recognition of exponents, and
//! the simplest rational inside an interval.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{FromPrimitive, One, Signed, Zero};
use serde::{Deserialize, Serialize};

use super::{Interval, Scalar};
use crate::error::{Error, Result};

pub const DEFAULT_Q_MAX: u64 = 64;
pub const DEFAULT_TOL: f64 = 1e-9;

/// Convergents `p/q` of the continued fraction of `x`, stopping once the
/// denominator would exceed `q_max` or the expansion terminates.
pub fn convergents(x: f64, q_max: u64) -> Vec<(i64, u64)> {
    let mut out = Vec::new();
    if !x.is_finite() {
        return out;
    }
    let (mut p0, mut q0): (i128, i128) = (1, 0);
    let (mut p1, mut q1): (i128, i128);
    let mut rest = x;
    let a0 = rest.floor();
    p1 = a0 as i128;
    q1 = 1;
    out.push((p1 as i64, q1 as u64));
    let mut frac = rest - a0;
    for _ in 0..64 {
        if frac.abs() < 1e-15 {
            break;
        }
        rest = 1.0 / frac;
        let a = rest.floor();
        if !a.is_finite() || a > 1e15 {
            break;
        }
        frac = rest - a;
        let a = a as i128;
        let p2 = a * p1 + p0;
        let q2 = a * q1 + q0;
        if q2 > q_max as i128 {
            break;
        }
        out.push((p2 as i64, q2 as u64));
        p0 = p1;
        q0 = q1;
        p1 = p2;
        q1 = q2;
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RationalExponent {
    /// First convergent within tolerance, as `(p, q)`.
    pub exponent: Option<(i64, u64)>,
    /// Closest convergent with `q ≤ q_max`.
    pub best: (i64, u64),
    /// `log(gamma_abs) / log(lambda)`.
    pub value: f64,
    pub enclosure: Interval,
    pub q_max: u64,
    pub tol: f64,
}

/// Recognises `x = log γ / log λ` as a rational `p/q` with `q ≤ q_max`.
pub fn rational_exponent(
    gamma_abs: &Scalar,
    lambda: &Scalar,
    q_max: u64,
    tol: f64,
) -> Result<RationalExponent> {
    let in_unit = |s: &Scalar| {
        let i = s.to_interval();
        i.lo() > 0.0 && i.hi() < 1.0
    };
    if !in_unit(gamma_abs) || !in_unit(lambda) {
        return Err(Error::Domain(format!(
            "rational_exponent needs 0 < gamma, lambda < 1 (got {gamma_abs}, {lambda})"
        )));
    }
    if q_max == 0 || !(tol > 0.0) {
        return Err(Error::Domain("q_max >= 1 and tol > 0 required".into()));
    }
    let enclosure = gamma_abs.ln() / lambda.ln();
    let value = gamma_abs.to_f64().ln() / lambda.to_f64().ln();
    let convs = convergents(value, q_max);
    let dist = |&(p, q): &(i64, u64)| (value - p as f64 / q as f64).abs();
    let exponent = convs.iter().copied().find(|c| dist(c) < tol);
    let best = convs
        .iter()
        .copied()
        .min_by(|a, b| dist(a).partial_cmp(&dist(b)).unwrap())
        .unwrap_or((value.round() as i64, 1));
    Ok(RationalExponent { exponent, best, value, enclosure, q_max, tol })
}

fn floor_rat(r: &BigRational) -> BigRational {
    BigRational::from_integer(r.numer().div_floor(r.denom()))
}

/// The rational with the smallest denominator in the closed interval
/// `[lo, hi]` (Stern–Brocot descent). Ties go to the smaller numerator.
pub fn simplest_rational_between(lo: &BigRational, hi: &BigRational) -> BigRational {
    assert!(lo <= hi);
    if lo.is_positive() {
        simplest_positive(lo, hi)
    } else if hi.is_negative() {
        -simplest_positive(&-hi, &-lo)
    } else {
        BigRational::zero()
    }
}

fn simplest_positive(lo: &BigRational, hi: &BigRational) -> BigRational {
    let fl = floor_rat(lo);
    if &fl == lo {
        return fl;
    }
    let next = &fl + BigRational::one();
    if &next <= hi {
        return next;
    }
    // lo and hi share the integer part
    let a = lo - &fl;
    let b = hi - &fl;
    let inner = simplest_positive(&b.recip(), &a.recip());
    fl + inner.recip()
}

/// Simplest rational inside an `f64` interval.
pub fn simplest_rational_in(iv: Interval) -> Option<BigRational> {
    let lo = BigRational::from_f64(iv.lo())?;
    let hi = BigRational::from_f64(iv.hi())?;
    Some(simplest_rational_between(&lo, &hi))
}

pub fn rational_to_pair(r: &BigRational) -> (BigInt, BigInt) {
    (r.numer().clone(), r.denom().clone())
}
