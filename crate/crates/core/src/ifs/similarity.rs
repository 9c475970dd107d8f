use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::scalar::rational_str;
use crate::numerics::{Interval, Matrix2, Scalar, Vector2};

/// A rotation angle. Exact fractions of a full turn keep group algebra exact;
/// `Cosine` is a rotation with rational cosine (possibly an irrational angle).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rotation {
    Turns(#[serde(with = "rational_str")] BigRational),
    Radians(f64),
    Cosine {
        #[serde(with = "rational_str")]
        cos: BigRational,
        #[serde(default = "yes")]
        sin_positive: bool,
    },
}

fn yes() -> bool {
    true
}

impl Rotation {
    pub fn turns(n: i64, d: i64) -> Self {
        Rotation::Turns(reduce_turns(&BigRational::new(BigInt::from(n), BigInt::from(d))))
    }

    pub fn identity() -> Self {
        Rotation::Turns(BigRational::zero())
    }

    /// `(cos, sin)` of the angle.
    pub fn cos_sin(&self) -> (Scalar, Scalar) {
        match self {
            Rotation::Turns(t) => {
                let t = reduce_turns(t);
                let quarter = &t * BigRational::from_integer(BigInt::from(4));
                if quarter.is_integer() {
                    let k: i64 = quarter.to_integer().try_into().unwrap_or(0);
                    let (c, s) = match k.rem_euclid(4) {
                        0 => (1, 0),
                        1 => (0, 1),
                        2 => (-1, 0),
                        _ => (0, -1),
                    };
                    return (Scalar::int(c), Scalar::int(s));
                }
                let half = &t * BigRational::from_integer(BigInt::from(12));
                if half.is_integer() || (&t * BigRational::from_integer(BigInt::from(6))).is_integer() {
                    // multiples of 1/12 turn: cos is 0, ±1/2, ±√3/2 (only the
                    // rational one is kept exact)
                    let k: i64 = half.to_integer().try_into().unwrap_or(0);
                    let angle = 2.0 * std::f64::consts::PI * (k as f64) / 12.0;
                    let cos = match k.rem_euclid(12) {
                        2 | 10 => Scalar::ratio(1, 2),
                        4 | 8 => Scalar::ratio(-1, 2),
                        _ => Scalar::Approx(Interval::cos_of(angle)),
                    };
                    let sin = match k.rem_euclid(12) {
                        1 | 5 => Scalar::ratio(1, 2),
                        7 | 11 => Scalar::ratio(-1, 2),
                        _ => Scalar::Approx(Interval::sin_of(angle)),
                    };
                    return (cos, sin);
                }
                let angle = Interval::from_rational(&t) * Interval::point(2.0 * std::f64::consts::PI).inflate(1e-15);
                (Scalar::Approx(angle.cos()), Scalar::Approx(angle.sin()))
            }
            Rotation::Radians(r) => (Scalar::Approx(Interval::cos_of(*r)), Scalar::Approx(Interval::sin_of(*r))),
            Rotation::Cosine { cos, sin_positive } => {
                let c = Scalar::Exact(cos.clone());
                let s = (Scalar::one() - &c * &c).sqrt();
                (c, if *sin_positive { s } else { -s })
            }
        }
    }

    /// Angle in radians (for reporting and float-mode group closure).
    pub fn radians(&self) -> f64 {
        match self {
            Rotation::Turns(t) => 2.0 * std::f64::consts::PI * Scalar::Exact(t.clone()).to_f64(),
            Rotation::Radians(r) => *r,
            Rotation::Cosine { cos, sin_positive } => {
                let a = Scalar::Exact(cos.clone()).to_f64().clamp(-1.0, 1.0).acos();
                if *sin_positive {
                    a
                } else {
                    -a
                }
            }
        }
    }
}

/// Reduces a fraction of a turn into `[0, 1)`.
pub fn reduce_turns(t: &BigRational) -> BigRational {
    let n = t.numer().mod_floor(t.denom());
    BigRational::new(n, t.denom().clone())
}

/// Orthogonal map `Rot(θ)·diag(1, −1)^reflect`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Orthogonal {
    #[serde(default = "Rotation::identity")]
    pub rotation: Rotation,
    #[serde(default)]
    pub reflect: bool,
}

impl Orthogonal {
    pub fn identity() -> Self {
        Orthogonal { rotation: Rotation::identity(), reflect: false }
    }

    pub fn rotation(rotation: Rotation) -> Self {
        Orthogonal { rotation, reflect: false }
    }

    pub fn reflection_x() -> Self {
        Orthogonal { rotation: Rotation::identity(), reflect: true }
    }

    pub fn is_identity(&self) -> bool {
        !self.reflect && matches!(&self.rotation, Rotation::Turns(t) if reduce_turns(t).is_zero())
    }

    pub fn matrix(&self) -> Matrix2 {
        let (c, s) = self.rotation.cos_sin();
        if self.reflect {
            Matrix2::new(c.clone(), s.clone(), s, -c)
        } else {
            Matrix2::new(c.clone(), -s.clone(), s, c)
        }
    }

    /// Whether the matrix is a signed permutation (exact quarter turns).
    pub fn is_axis_preserving(&self) -> bool {
        match &self.rotation {
            Rotation::Turns(t) => (t * BigRational::from_integer(BigInt::from(4))).is_integer(),
            Rotation::Cosine { cos, .. } => cos.is_zero() || cos == &BigRational::one() || cos == &-BigRational::one(),
            Rotation::Radians(_) => false,
        }
    }
}

/// `z ↦ scale·O·z + translation` with `0 < scale < 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Similarity2 {
    pub scale: Scalar,
    #[serde(flatten)]
    pub orthogonal: Orthogonal,
    pub translation: Vector2,
}

impl Similarity2 {
    pub fn new(scale: Scalar, orthogonal: Orthogonal, translation: Vector2) -> Result<Self> {
        let s = Similarity2 { scale, orthogonal, translation };
        s.validate()?;
        Ok(s)
    }

    /// `z ↦ (n/d)·z + t`.
    pub fn homothety(scale: Scalar, translation: Vector2) -> Result<Self> {
        Similarity2::new(scale, Orthogonal::identity(), translation)
    }

    pub fn validate(&self) -> Result<()> {
        let s = self.scale.to_interval();
        if !(s.lo() > 0.0 && s.hi() < 1.0) {
            return Err(Error::InvalidIfs(format!("scale {} not in (0, 1)", self.scale)));
        }
        Ok(())
    }

    pub fn linear(&self) -> Matrix2 {
        self.orthogonal.matrix().scale(&self.scale)
    }

    pub fn is_exact(&self) -> bool {
        self.linear().is_exact() && self.translation.is_exact()
    }
}

impl fmt::Display for Similarity2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "z -> {}·{}·z + {}", self.scale, self.orthogonal.matrix(), self.translation)
    }
}
