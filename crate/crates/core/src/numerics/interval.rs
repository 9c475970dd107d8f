//! Closed `f64` intervals with directed rounding.
//!
//! Every operation returns an enclosure of the exact real result. Rounding
//! direction is recovered from error-free transformations (two-sum and fused
//! multiply-add residuals), so results that are exactly representable stay
//! points instead of widening by an ulp at every step.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_rational::BigRational;
use num_traits::{FromPrimitive, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

/// Below this magnitude the fma residual may not be exact (subnormal range).
const TINY: f64 = 1e-290;

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

#[inline]
fn add_dir(a: f64, b: f64) -> (f64, f64) {
    let (s, e) = two_sum(a, b);
    if !s.is_finite() || !e.is_finite() {
        return (s, s);
    }
    match e.partial_cmp(&0.0) {
        Some(Ordering::Less) => (s.next_down(), s),
        Some(Ordering::Greater) => (s, s.next_up()),
        _ => (s, s),
    }
}

#[inline]
fn mul_dir(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    if !p.is_finite() {
        return (p, p);
    }
    if p != 0.0 && p.abs() < TINY {
        return (p.next_down(), p.next_up());
    }
    if p == 0.0 {
        if a == 0.0 || b == 0.0 {
            return (0.0, 0.0);
        }
        return (-f64::MIN_POSITIVE, f64::MIN_POSITIVE);
    }
    let e = a.mul_add(b, -p);
    match e.partial_cmp(&0.0) {
        Some(Ordering::Less) => (p.next_down(), p),
        Some(Ordering::Greater) => (p, p.next_up()),
        _ => (p, p),
    }
}

#[inline]
fn div_dir(a: f64, b: f64) -> (f64, f64) {
    let q = a / b;
    if !q.is_finite() {
        return (q, q);
    }
    if q != 0.0 && q.abs() < TINY || (q == 0.0 && a != 0.0) {
        return (q.next_down(), q.next_up());
    }
    // a - q*b is exact; its sign against b tells whether q undershoots.
    let r = (-q).mul_add(b, a);
    let r = if b < 0.0 { -r } else { r };
    match r.partial_cmp(&0.0) {
        Some(Ordering::Less) => (q.next_down(), q),
        Some(Ordering::Greater) => (q, q.next_up()),
        _ => (q, q),
    }
}

#[inline]
fn sqrt_dir(a: f64) -> (f64, f64) {
    let s = a.sqrt();
    if !s.is_finite() || s == 0.0 {
        return (s, s);
    }
    let r = (-s).mul_add(s, a);
    match r.partial_cmp(&0.0) {
        Some(Ordering::Less) => (s.next_down(), s),
        Some(Ordering::Greater) => (s, s.next_up()),
        _ => (s, s),
    }
}

/// Pads a libm result by two ulps on each side; transcendental functions are
/// not correctly rounded.
#[inline]
fn pad2(lo: f64, hi: f64) -> (f64, f64) {
    (lo.next_down().next_down(), hi.next_up().next_up())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    pub const ZERO: Interval = Interval { lo: 0.0, hi: 0.0 };
    pub const ONE: Interval = Interval { lo: 1.0, hi: 1.0 };

    /// Builds `[lo, hi]`.
    ///
    /// Panics when `lo > hi` or either bound is NaN.
    pub fn new(lo: f64, hi: f64) -> Self {
        assert!(lo <= hi, "invalid interval [{lo}, {hi}]");
        Interval { lo, hi }
    }

    pub fn point(x: f64) -> Self {
        Interval::new(x, x)
    }

    /// Tightest enclosure of an exact rational.
    pub fn from_rational(r: &BigRational) -> Self {
        let f = r.to_f64().unwrap_or(f64::NAN);
        if !f.is_finite() {
            return if r.is_zero() {
                Interval::ZERO
            } else if r > &BigRational::zero() {
                Interval::new(f64::MAX, f64::INFINITY)
            } else {
                Interval::new(f64::NEG_INFINITY, -f64::MAX)
            };
        }
        match BigRational::from_f64(f) {
            Some(back) => match back.cmp(r) {
                Ordering::Equal => Interval::point(f),
                Ordering::Less => Interval::new(f, f.next_up()),
                Ordering::Greater => Interval::new(f.next_down(), f),
            },
            None => Interval::new(f.next_down(), f.next_up()),
        }
    }

    pub fn hull_of(a: f64, b: f64) -> Self {
        Interval::new(a.min(b), a.max(b))
    }

    #[inline]
    pub fn lo(&self) -> f64 {
        self.lo
    }

    #[inline]
    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn mid(&self) -> f64 {
        if self.lo == self.hi {
            self.lo
        } else {
            0.5 * self.lo + 0.5 * self.hi
        }
    }

    /// Upper bound on the width.
    pub fn width(&self) -> f64 {
        add_dir(self.hi, -self.lo).1
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn contains_interval(&self, other: &Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn contains_zero(&self) -> bool {
        self.contains(0.0)
    }

    pub fn intersects(&self, other: &Interval) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }

    pub fn hull(&self, other: &Interval) -> Interval {
        Interval::new(self.lo.min(other.lo), self.hi.max(other.hi))
    }

    pub fn is_strictly_positive(&self) -> bool {
        self.lo > 0.0
    }

    pub fn is_strictly_negative(&self) -> bool {
        self.hi < 0.0
    }

    /// Widens by `r` on both sides (outward rounded).
    pub fn inflate(&self, r: f64) -> Interval {
        Interval::new(add_dir(self.lo, -r).0, add_dir(self.hi, r).1)
    }

    pub fn abs(&self) -> Interval {
        if self.lo >= 0.0 {
            *self
        } else if self.hi <= 0.0 {
            -*self
        } else {
            Interval::new(0.0, (-self.lo).max(self.hi))
        }
    }

    pub fn sqr(&self) -> Interval {
        let a = self.abs();
        Interval::new(mul_dir(a.lo, a.lo).0, mul_dir(a.hi, a.hi).1)
    }

    /// Square root of the nonnegative part.
    pub fn sqrt(&self) -> Interval {
        let lo = self.lo.max(0.0);
        let hi = self.hi.max(0.0);
        Interval::new(sqrt_dir(lo).0, sqrt_dir(hi).1)
    }

    pub fn recip(&self) -> Interval {
        Interval::ONE / *self
    }

    /// Natural logarithm; requires a strictly positive interval.
    pub fn ln(&self) -> Interval {
        assert!(self.lo > 0.0, "ln of non-positive interval {self}");
        let (lo, hi) = pad2(self.lo.ln(), self.hi.ln());
        Interval::new(lo, hi)
    }

    pub fn exp(&self) -> Interval {
        let (lo, hi) = pad2(self.lo.exp(), self.hi.exp());
        Interval::new(lo.max(0.0), hi)
    }

    /// `self^p` for a positive base.
    pub fn powf(&self, p: &Interval) -> Interval {
        (self.ln() * *p).exp()
    }

    pub fn powi(&self, n: u32) -> Interval {
        let mut acc = Interval::ONE;
        for _ in 0..n {
            acc = acc * *self;
        }
        acc
    }

    pub fn min(&self, other: &Interval) -> Interval {
        Interval::new(self.lo.min(other.lo), self.hi.min(other.hi))
    }

    pub fn max(&self, other: &Interval) -> Interval {
        Interval::new(self.lo.max(other.lo), self.hi.max(other.hi))
    }

    /// Enclosure of `cos(x)` for a point angle given in radians.
    pub fn cos_of(x: f64) -> Interval {
        let (lo, hi) = pad2(x.cos(), x.cos());
        Interval::new(lo.max(-1.0), hi.min(1.0))
    }

    pub fn sin_of(x: f64) -> Interval {
        let (lo, hi) = pad2(x.sin(), x.sin());
        Interval::new(lo.max(-1.0), hi.min(1.0))
    }

    /// Enclosure of cos over an interval of angles (radians).
    pub fn cos(&self) -> Interval {
        if self.width() >= 2.0 * std::f64::consts::PI {
            return Interval::new(-1.0, 1.0);
        }
        let mut lo = self.lo.cos().min(self.hi.cos());
        let mut hi = self.lo.cos().max(self.hi.cos());
        // extrema at multiples of pi inside the range
        let k0 = (self.lo / std::f64::consts::PI).floor() as i64 - 1;
        let k1 = (self.hi / std::f64::consts::PI).ceil() as i64 + 1;
        for k in k0..=k1 {
            let x = k as f64 * std::f64::consts::PI;
            if x >= self.lo - 1e-15 && x <= self.hi + 1e-15 {
                if k.rem_euclid(2) == 0 {
                    hi = 1.0;
                } else {
                    lo = -1.0;
                }
            }
        }
        let (lo, hi) = pad2(lo, hi);
        Interval::new(lo.max(-1.0), hi.min(1.0))
    }

    pub fn sin(&self) -> Interval {
        (*self - Interval::point(std::f64::consts::FRAC_PI_2).inflate(1e-16)).cos()
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_point() {
            write!(f, "{}", self.lo)
        } else {
            write!(f, "[{}, {}]", self.lo, self.hi)
        }
    }
}

impl From<f64> for Interval {
    fn from(x: f64) -> Self {
        Interval::point(x)
    }
}

impl Add for Interval {
    type Output = Interval;
    fn add(self, rhs: Interval) -> Interval {
        Interval::new(add_dir(self.lo, rhs.lo).0, add_dir(self.hi, rhs.hi).1)
    }
}

impl Sub for Interval {
    type Output = Interval;
    fn sub(self, rhs: Interval) -> Interval {
        self + (-rhs)
    }
}

impl Neg for Interval {
    type Output = Interval;
    fn neg(self) -> Interval {
        Interval::new(-self.hi, -self.lo)
    }
}

impl Mul for Interval {
    type Output = Interval;
    fn mul(self, rhs: Interval) -> Interval {
        if self.is_point() && self.lo == 0.0 || rhs.is_point() && rhs.lo == 0.0 {
            return Interval::ZERO;
        }
        let cands = [
            mul_dir(self.lo, rhs.lo),
            mul_dir(self.lo, rhs.hi),
            mul_dir(self.hi, rhs.lo),
            mul_dir(self.hi, rhs.hi),
        ];
        let lo = cands.iter().map(|c| c.0).fold(f64::INFINITY, f64::min);
        let hi = cands.iter().map(|c| c.1).fold(f64::NEG_INFINITY, f64::max);
        Interval::new(lo, hi)
    }
}

impl Div for Interval {
    type Output = Interval;
    /// Division by an interval containing zero yields the whole real line.
    fn div(self, rhs: Interval) -> Interval {
        if rhs.contains_zero() {
            return Interval::new(f64::NEG_INFINITY, f64::INFINITY);
        }
        let cands = [
            div_dir(self.lo, rhs.lo),
            div_dir(self.lo, rhs.hi),
            div_dir(self.hi, rhs.lo),
            div_dir(self.hi, rhs.hi),
        ];
        let lo = cands.iter().map(|c| c.0).fold(f64::INFINITY, f64::min);
        let hi = cands.iter().map(|c| c.1).fold(f64::NEG_INFINITY, f64::max);
        Interval::new(lo, hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;
    use proptest::prelude::*;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn exact_operations_stay_points() {
        let a = Interval::point(0.5);
        let b = Interval::point(0.25);
        assert!((a + b).is_point());
        assert!((a * b).is_point());
        assert!((a / b).is_point());
        assert_eq!((a / b).lo(), 2.0);
    }

    #[test]
    fn third_is_enclosed() {
        let t = Interval::ONE / Interval::point(3.0);
        assert!(!t.is_point());
        let r = Interval::from_rational(&rat(1, 3));
        assert_eq!(t, r);
        assert!(t.hi().next_down() == t.lo());
    }

    #[test]
    fn sqrt_two_brackets() {
        let s = Interval::point(2.0).sqrt();
        assert!(s.lo() * s.lo() <= 2.0 && s.hi() * s.hi() >= 2.0);
        assert!(Interval::point(4.0).sqrt().is_point());
    }

    #[test]
    fn cos_range_covers_extrema() {
        let c = Interval::new(-0.1, 0.1).cos();
        assert_eq!(c.hi(), 1.0);
        assert!(c.lo() <= 0.1f64.cos());
    }

    proptest! {
        #[test]
        fn rational_ops_are_enclosed(a in -1000i64..1000, b in 1i64..1000, c in -1000i64..1000, d in 1i64..1000) {
            let x = rat(a, b);
            let y = rat(c, d);
            let ix = Interval::from_rational(&x);
            let iy = Interval::from_rational(&y);
            let check = |iv: Interval, exact: BigRational| {
                let lo = BigRational::from_f64(iv.lo()).unwrap();
                let hi = BigRational::from_f64(iv.hi()).unwrap();
                lo <= exact && exact <= hi
            };
            prop_assert!(check(ix + iy, &x + &y));
            prop_assert!(check(ix - iy, &x - &y));
            prop_assert!(check(ix * iy, &x * &y));
            if c != 0 {
                prop_assert!(check(ix / iy, &x / &y));
            }
        }
    }
}
