use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::numerics::{Interval, Matrix2, Vector2};

/// `z ↦ A·z + t` over [`Scalar`](crate::numerics::Scalar) entries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffineMap2 {
    pub linear: Matrix2,
    pub translation: Vector2,
}

impl AffineMap2 {
    pub fn new(linear: Matrix2, translation: Vector2) -> Self {
        AffineMap2 { linear, translation }
    }

    pub fn identity() -> Self {
        AffineMap2::new(Matrix2::identity(), Vector2::zero())
    }

    /// Builds from six `(numerator, denominator)` pairs: `a, b, c, d, tx, ty`.
    pub fn ratios(e: [(i64, i64); 6]) -> Self {
        AffineMap2::new(
            Matrix2::ratios([e[0], e[1], e[2], e[3]]),
            Vector2::ratio(e[4].0, e[4].1, e[5].0, e[5].1),
        )
    }

    pub fn from_f64(m: [f64; 4], t: [f64; 2]) -> Self {
        AffineMap2::new(Matrix2::from_f64(m), Vector2::floats(t[0], t[1]))
    }

    pub fn is_exact(&self) -> bool {
        self.linear.is_exact() && self.translation.is_exact()
    }

    pub fn apply(&self, z: &Vector2) -> Vector2 {
        &self.linear.apply(z) + &self.translation
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &AffineMap2) -> AffineMap2 {
        AffineMap2::new(&self.linear * &other.linear, self.apply(&other.translation))
    }

    pub fn inverse(&self) -> Result<AffineMap2> {
        let inv = self.linear.inverse()?;
        let t = -&inv.apply(&self.translation);
        Ok(AffineMap2::new(inv, t))
    }

    pub fn pow(&self, n: u32) -> AffineMap2 {
        let mut out = AffineMap2::identity();
        for _ in 0..n {
            out = self.compose(&out);
        }
        out
    }

    pub fn exact_eq(&self, other: &AffineMap2) -> bool {
        self.linear.exact_eq(&other.linear) && self.translation.exact_eq(&other.translation)
    }

    pub fn to_interval(&self) -> IAffine {
        IAffine { m: self.linear.to_intervals(), t: self.translation.to_intervals() }
    }

    /// Coefficients `[a, b, c, d, tx, ty]` as floats.
    pub fn coefficients(&self) -> [f64; 6] {
        let [a, b, c, d] = self.linear.to_f64();
        let [x, y] = self.translation.to_f64();
        [a, b, c, d, x, y]
    }
}

impl fmt::Display for AffineMap2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "z -> {}·z + {}", self.linear, self.translation)
    }
}

/// Axis-aligned closed rectangle with outward-rounded corners.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x: Interval,
    pub y: Interval,
}

impl Rect {
    pub fn new(x: Interval, y: Interval) -> Self {
        Rect { x, y }
    }

    pub fn from_bounds(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        Rect::new(Interval::new(x0, x1), Interval::new(y0, y1))
    }

    pub fn point(p: [f64; 2]) -> Self {
        Rect::new(Interval::point(p[0]), Interval::point(p[1]))
    }

    pub fn from_point(p: &[Interval; 2]) -> Self {
        Rect::new(p[0], p[1])
    }

    pub fn center(&self) -> [f64; 2] {
        [self.x.mid(), self.y.mid()]
    }

    pub fn corners(&self) -> [[f64; 2]; 4] {
        [
            [self.x.lo(), self.y.lo()],
            [self.x.hi(), self.y.lo()],
            [self.x.lo(), self.y.hi()],
            [self.x.hi(), self.y.hi()],
        ]
    }

    /// Upper bound on the diameter.
    pub fn diam(&self) -> f64 {
        let w = Interval::point(self.x.hi()) - Interval::point(self.x.lo());
        let h = Interval::point(self.y.hi()) - Interval::point(self.y.lo());
        (w.sqr() + h.sqr()).sqrt().hi()
    }

    pub fn max_side(&self) -> f64 {
        self.x.width().max(self.y.width())
    }

    pub fn hull(&self, other: &Rect) -> Rect {
        Rect::new(self.x.hull(&other.x), self.y.hull(&other.y))
    }

    pub fn inflate(&self, r: f64) -> Rect {
        Rect::new(self.x.inflate(r), self.y.inflate(r))
    }

    pub fn intersects(&self, other: &Rect) -> bool {
        self.x.intersects(&other.x) && self.y.intersects(&other.y)
    }

    pub fn contains_rect(&self, other: &Rect) -> bool {
        self.x.contains_interval(&other.x) && self.y.contains_interval(&other.y)
    }

    pub fn contains_point(&self, p: [f64; 2]) -> bool {
        self.x.contains(p[0]) && self.y.contains(p[1])
    }

    /// Enclosure of the Euclidean distance between the closest points.
    pub fn dist(&self, other: &Rect) -> Interval {
        let gx = axis_gap(&self.x, &other.x);
        let gy = axis_gap(&self.y, &other.y);
        (gx.sqr() + gy.sqr()).sqrt()
    }

    /// Enclosure of `sup { |p − q| : p ∈ self, q ∈ other }`.
    pub fn max_dist(&self, other: &Rect) -> Interval {
        let sx = axis_spread(&self.x, &other.x);
        let sy = axis_spread(&self.y, &other.y);
        (sx.sqr() + sy.sqr()).sqrt()
    }

    /// Enclosure of `sup_{p ∈ self} dist(p, other)`.
    pub fn excess(&self, other: &Rect) -> Interval {
        let ex = axis_excess(&self.x, &other.x);
        let ey = axis_excess(&self.y, &other.y);
        (ex.sqr() + ey.sqr()).sqrt()
    }
}

fn axis_gap(a: &Interval, b: &Interval) -> Interval {
    let left = Interval::point(b.lo()) - Interval::point(a.hi());
    let right = Interval::point(a.lo()) - Interval::point(b.hi());
    let g = left.max(&right);
    Interval::new(g.lo().max(0.0), g.hi().max(0.0))
}

fn axis_spread(a: &Interval, b: &Interval) -> Interval {
    let l = Interval::point(a.hi()) - Interval::point(b.lo());
    let r = Interval::point(b.hi()) - Interval::point(a.lo());
    l.max(&r)
}

// sup over p ∈ a of the distance from p to b, per axis
fn axis_excess(a: &Interval, b: &Interval) -> Interval {
    let below = Interval::point(b.lo()) - Interval::point(a.lo());
    let above = Interval::point(a.hi()) - Interval::point(b.hi());
    let e = below.max(&above);
    Interval::new(e.lo().max(0.0), e.hi().max(0.0))
}

/// Interval-valued affine map, the workhorse of cover computations.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IAffine {
    /// Row-major linear part.
    pub m: [Interval; 4],
    pub t: [Interval; 2],
}

impl IAffine {
    pub fn identity() -> Self {
        IAffine { m: [Interval::ONE, Interval::ZERO, Interval::ZERO, Interval::ONE], t: [Interval::ZERO; 2] }
    }

    pub fn apply(&self, p: &[Interval; 2]) -> [Interval; 2] {
        let [a, b, c, d] = self.m;
        [a * p[0] + b * p[1] + self.t[0], c * p[0] + d * p[1] + self.t[1]]
    }

    pub fn apply_f64(&self, p: [f64; 2]) -> [Interval; 2] {
        self.apply(&[Interval::point(p[0]), Interval::point(p[1])])
    }

    /// Hull of the image of a rectangle (tight up to rounding, since each
    /// coordinate occurs once in each linear form).
    pub fn apply_rect(&self, r: &Rect) -> Rect {
        let [x, y] = self.apply(&[r.x, r.y]);
        Rect::new(x, y)
    }

    /// `self ∘ other`.
    pub fn compose(&self, o: &IAffine) -> IAffine {
        let [a, b, c, d] = self.m;
        let [e, f, g, h] = o.m;
        IAffine { m: [a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h], t: self.apply(&o.t) }
    }

    /// Upper bound on the operator norm of the linear part.
    pub fn norm(&self) -> f64 {
        let [a, b, c, d] = self.m;
        let p = a.sqr() + c.sqr();
        let q = a * b + c * d;
        let r = b.sqr() + d.sqr();
        let half = Interval::point(0.5);
        let disc = ((p - r) * half).sqr() + q.sqr();
        ((p + r) * half + disc.sqrt()).sqrt().hi()
    }
}
