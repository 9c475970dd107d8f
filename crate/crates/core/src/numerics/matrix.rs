use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use super::{Interval, Scalar};
use crate::error::{Error, Result};

/// A planar vector over [`Scalar`].
#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct Vector2 {
    pub x: Scalar,
    pub y: Scalar,
}

impl Vector2 {
    pub fn new(x: Scalar, y: Scalar) -> Self {
        Vector2 { x, y }
    }

    pub fn zero() -> Self {
        Vector2::new(Scalar::zero(), Scalar::zero())
    }

    pub fn ratio(xn: i64, xd: i64, yn: i64, yd: i64) -> Self {
        Vector2::new(Scalar::ratio(xn, xd), Scalar::ratio(yn, yd))
    }

    pub fn floats(x: f64, y: f64) -> Self {
        Vector2::new(Scalar::float(x), Scalar::float(y))
    }

    pub fn is_exact(&self) -> bool {
        self.x.is_exact() && self.y.is_exact()
    }

    pub fn to_intervals(&self) -> [Interval; 2] {
        [self.x.to_interval(), self.y.to_interval()]
    }

    pub fn to_f64(&self) -> [f64; 2] {
        [self.x.to_f64(), self.y.to_f64()]
    }

    pub fn dot(&self, other: &Vector2) -> Scalar {
        &self.x * &other.x + &self.y * &other.y
    }

    pub fn norm_sq(&self) -> Scalar {
        self.dot(self)
    }

    pub fn scale(&self, s: &Scalar) -> Vector2 {
        Vector2::new(&self.x * s, &self.y * s)
    }

    pub fn exact_eq(&self, other: &Vector2) -> bool {
        self.x.exact_eq(&other.x) && self.y.exact_eq(&other.y)
    }
}

impl Add<&Vector2> for &Vector2 {
    type Output = Vector2;
    fn add(self, rhs: &Vector2) -> Vector2 {
        Vector2::new(&self.x + &rhs.x, &self.y + &rhs.y)
    }
}

impl Sub<&Vector2> for &Vector2 {
    type Output = Vector2;
    fn sub(self, rhs: &Vector2) -> Vector2 {
        Vector2::new(&self.x - &rhs.x, &self.y - &rhs.y)
    }
}

impl Neg for &Vector2 {
    type Output = Vector2;
    fn neg(self) -> Vector2 {
        Vector2::new(-&self.x, -&self.y)
    }
}

impl fmt::Display for Vector2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Row-major 2×2 matrix `[[a, b], [c, d]]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Matrix2 {
    pub a: Scalar,
    pub b: Scalar,
    pub c: Scalar,
    pub d: Scalar,
}

impl Matrix2 {
    pub fn new(a: Scalar, b: Scalar, c: Scalar, d: Scalar) -> Self {
        Matrix2 { a, b, c, d }
    }

    pub fn identity() -> Self {
        Matrix2::diag(Scalar::one(), Scalar::one())
    }

    pub fn diag(a: Scalar, d: Scalar) -> Self {
        Matrix2::new(a, Scalar::zero(), Scalar::zero(), d)
    }

    pub fn scalar(s: Scalar) -> Self {
        Matrix2::diag(s.clone(), s)
    }

    /// Builds from `[[n/d, ...], ...]` integer pairs, row-major.
    pub fn ratios(entries: [(i64, i64); 4]) -> Self {
        let [a, b, c, d] = entries.map(|(n, d)| Scalar::ratio(n, d));
        Matrix2::new(a, b, c, d)
    }

    pub fn from_f64(m: [f64; 4]) -> Self {
        let [a, b, c, d] = m.map(Scalar::float);
        Matrix2::new(a, b, c, d)
    }

    pub fn entries(&self) -> [&Scalar; 4] {
        [&self.a, &self.b, &self.c, &self.d]
    }

    pub fn is_exact(&self) -> bool {
        self.entries().iter().all(|s| s.is_exact())
    }

    pub fn to_intervals(&self) -> [Interval; 4] {
        [self.a.to_interval(), self.b.to_interval(), self.c.to_interval(), self.d.to_interval()]
    }

    pub fn to_f64(&self) -> [f64; 4] {
        [self.a.to_f64(), self.b.to_f64(), self.c.to_f64(), self.d.to_f64()]
    }

    pub fn det(&self) -> Scalar {
        &self.a * &self.d - &self.b * &self.c
    }

    pub fn trace(&self) -> Scalar {
        &self.a + &self.d
    }

    pub fn transpose(&self) -> Matrix2 {
        Matrix2::new(self.a.clone(), self.c.clone(), self.b.clone(), self.d.clone())
    }

    pub fn scale(&self, s: &Scalar) -> Matrix2 {
        Matrix2::new(&self.a * s, &self.b * s, &self.c * s, &self.d * s)
    }

    pub fn apply(&self, v: &Vector2) -> Vector2 {
        Vector2::new(&self.a * &v.x + &self.b * &v.y, &self.c * &v.x + &self.d * &v.y)
    }

    /// Inverse; fails when the determinant may vanish.
    pub fn inverse(&self) -> Result<Matrix2> {
        let det = self.det();
        if det.may_be_zero() {
            return Err(Error::SingularMatrix(det.to_string()));
        }
        let inv = det.recip()?;
        Ok(Matrix2::new(&self.d * &inv, -(&self.b * &inv), -(&self.c * &inv), &self.a * &inv))
    }

    pub fn pow(&self, n: u32) -> Matrix2 {
        let mut result = Matrix2::identity();
        let mut base = self.clone();
        let mut e = n;
        while e > 0 {
            if e & 1 == 1 {
                result = &result * &base;
            }
            base = &base * &base;
            e >>= 1;
        }
        result
    }

    /// Enclosure of the operator (spectral) norm.
    pub fn operator_norm(&self) -> Interval {
        let [a, b, c, d] = self.to_intervals();
        // AᵀA = [[p, q], [q, r]]
        let p = a.sqr() + c.sqr();
        let q = a * b + c * d;
        let r = b.sqr() + d.sqr();
        let half = Interval::point(0.5);
        let disc = ((p - r) * half).sqr() + q.sqr();
        ((p + r) * half + disc.sqrt()).sqrt()
    }

    /// Entries of a possibly interval matrix all certainly equal to `other`'s.
    pub fn exact_eq(&self, other: &Matrix2) -> bool {
        self.entries().iter().zip(other.entries()).all(|(x, y)| x.exact_eq(y))
    }

    /// Whether `AᵀA = c·I` holds exactly (exact mode) or within the enclosure.
    pub fn is_scaled_orthogonal(&self) -> Option<bool> {
        let ata = &self.transpose() * self;
        let off = ata.b.eq_certain(&Scalar::zero());
        let diag = ata.a.eq_certain(&ata.d);
        match (off, diag) {
            (Some(true), Some(true)) => Some(true),
            (Some(false), _) | (_, Some(false)) => Some(false),
            _ => None,
        }
    }
}

impl Mul<&Matrix2> for &Matrix2 {
    type Output = Matrix2;
    fn mul(self, rhs: &Matrix2) -> Matrix2 {
        Matrix2::new(
            &self.a * &rhs.a + &self.b * &rhs.c,
            &self.a * &rhs.b + &self.b * &rhs.d,
            &self.c * &rhs.a + &self.d * &rhs.c,
            &self.c * &rhs.b + &self.d * &rhs.d,
        )
    }
}

impl Add<&Matrix2> for &Matrix2 {
    type Output = Matrix2;
    fn add(self, rhs: &Matrix2) -> Matrix2 {
        Matrix2::new(&self.a + &rhs.a, &self.b + &rhs.b, &self.c + &rhs.c, &self.d + &rhs.d)
    }
}

impl fmt::Display for Matrix2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[[{}, {}], [{}, {}]]", self.a, self.b, self.c, self.d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_round_trip() {
        let m = Matrix2::ratios([(1, 3), (0, 1), (1, 4), (1, 3)]);
        let inv = m.inverse().unwrap();
        assert!((&m * &inv).exact_eq(&Matrix2::identity()));
    }

    #[test]
    fn singular_rejected() {
        let m = Matrix2::ratios([(1, 2), (1, 4), (1, 1), (1, 2)]);
        assert!(matches!(m.inverse(), Err(Error::SingularMatrix(_))));
    }

    #[test]
    fn norm_of_diagonal() {
        let m = Matrix2::ratios([(1, 3), (0, 1), (0, 1), (-1, 9)]);
        assert!(m.operator_norm().contains(1.0 / 3.0));
    }

    #[test]
    fn pow_matches_repeated_product() {
        let m = Matrix2::ratios([(1, 3), (0, 1), (1, 4), (1, 3)]);
        let p = m.pow(5);
        let mut q = Matrix2::identity();
        for _ in 0..5 {
            q = &q * &m;
        }
        assert!(p.exact_eq(&q));
    }
}
