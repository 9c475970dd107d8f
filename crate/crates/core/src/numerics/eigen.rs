use serde::{Deserialize, Serialize};

use super::{Interval, Matrix2, Scalar, ScalarMode};
use crate::error::{Error, Result};

/// Discriminant enclosures wider than this that straddle zero are reported
/// as borderline rather than resolved.
pub const BORDERLINE_WIDTH: f64 = 1e-14;

/// Determinant enclosures containing zero and narrower than this are treated
/// as singular.
pub const SINGULAR_FLOOR: f64 = 1e-300;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Diagonalizable {
    Yes,
    No,
    Borderline,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum JordanClass {
    DiagonalReal,
    ComplexConjugate,
    JordanBlock,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexScalar {
    pub re: Scalar,
    pub im: Scalar,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenReport {
    /// Ordered so that `moduli[0] ≥ moduli[1]`.
    pub eigenvalues: [ComplexScalar; 2],
    pub moduli: [Scalar; 2],
    pub diagonalizable: Diagonalizable,
    pub jordan_class: JordanClass,
    pub mode: ScalarMode,
}

impl EigenReport {
    /// Float residual `|γ² − tr·γ + det|` of each eigenvalue.
    pub fn residuals(&self, m: &Matrix2) -> [f64; 2] {
        let tr = m.trace().to_f64();
        let det = m.det().to_f64();
        self.eigenvalues.clone().map(|g| {
            let (re, im) = (g.re.to_f64(), g.im.to_f64());
            let sq_re = re * re - im * im;
            let sq_im = 2.0 * re * im;
            let r = sq_re - tr * re + det;
            let i = sq_im - tr * im;
            r.hypot(i)
        })
    }
}

fn real(s: Scalar) -> ComplexScalar {
    ComplexScalar { re: s, im: Scalar::zero() }
}

/// Eigenvalues, diagonalizability and Jordan type of an invertible 2×2 matrix.
pub fn eigen_analyze(m: &Matrix2) -> Result<EigenReport> {
    let det = m.det();
    match &det {
        Scalar::Exact(_) if det.is_zero_certain() => {
            return Err(Error::SingularMatrix(det.to_string()));
        }
        Scalar::Approx(i) if i.contains_zero() && i.width() < SINGULAR_FLOOR => {
            return Err(Error::SingularMatrix(det.to_string()));
        }
        _ => {}
    }
    let mode = if m.is_exact() { ScalarMode::Exact } else { ScalarMode::Interval };
    let tr = m.trace();
    let half = Scalar::ratio(1, 2);
    let disc = &tr * &tr - Scalar::int(4) * &det;
    let centre = &tr * &half;

    let disc_sign = match &disc {
        Scalar::Exact(_) => disc.sign(),
        Scalar::Approx(i) => {
            if i.is_strictly_positive() {
                Some(std::cmp::Ordering::Greater)
            } else if i.is_strictly_negative() {
                Some(std::cmp::Ordering::Less)
            } else if i.width() <= BORDERLINE_WIDTH {
                Some(std::cmp::Ordering::Equal)
            } else {
                None
            }
        }
    };

    let ordered = |g1: Scalar, g2: Scalar| {
        let (m1, m2) = (g1.abs(), g2.abs());
        if m2.to_f64() > m1.to_f64() {
            ([real(g2), real(g1)], [m2, m1])
        } else {
            ([real(g1), real(g2)], [m1, m2])
        }
    };

    let report = match disc_sign {
        Some(std::cmp::Ordering::Greater) => {
            let root = disc.sqrt();
            let g1 = &centre + &(&root * &half);
            let g2 = &centre - &(&root * &half);
            let (eigenvalues, moduli) = ordered(g1, g2);
            EigenReport {
                eigenvalues,
                moduli,
                diagonalizable: Diagonalizable::Yes,
                jordan_class: JordanClass::DiagonalReal,
                mode,
            }
        }
        Some(std::cmp::Ordering::Less) => {
            let im = (-&disc).sqrt() * &half;
            let modulus = det.sqrt();
            EigenReport {
                eigenvalues: [
                    ComplexScalar { re: centre.clone(), im: im.clone() },
                    ComplexScalar { re: centre, im: -im },
                ],
                moduli: [modulus.clone(), modulus],
                diagonalizable: Diagonalizable::Yes,
                jordan_class: JordanClass::ComplexConjugate,
                mode,
            }
        }
        Some(std::cmp::Ordering::Equal) => {
            // repeated eigenvalue: diagonalizable iff the matrix is scalar
            let scalar_matrix = m.b.eq_certain(&Scalar::zero()) == Some(true)
                && m.c.eq_certain(&Scalar::zero()) == Some(true)
                && m.a.eq_certain(&m.d) == Some(true);
            let near_scalar = m.b.may_be_zero() && m.c.may_be_zero() && (&m.a - &m.d).may_be_zero();
            let diag = if scalar_matrix || (mode == ScalarMode::Interval && near_scalar) {
                Diagonalizable::Yes
            } else {
                Diagonalizable::No
            };
            let g = match &disc {
                Scalar::Approx(i) => {
                    // widen by the discriminant enclosure
                    let r = Interval::new(0.0, i.hi().max(0.0)).sqrt() * Interval::point(0.5);
                    Scalar::Approx(centre.to_interval() + Interval::new(-r.hi(), r.hi()))
                }
                Scalar::Exact(_) => centre,
            };
            EigenReport {
                eigenvalues: [real(g.clone()), real(g.clone())],
                moduli: [g.abs(), g.abs()],
                diagonalizable: diag,
                jordan_class: if diag == Diagonalizable::Yes {
                    JordanClass::DiagonalReal
                } else {
                    JordanClass::JordanBlock
                },
                mode,
            }
        }
        None => {
            // borderline: enclose both roots as real numbers
            let i = disc.to_interval();
            let r = Interval::new(0.0, i.hi().max(0.0)).sqrt() * Interval::point(0.5);
            let c = centre.to_interval();
            let g1 = Scalar::Approx(c + Interval::new(0.0, r.hi()));
            let g2 = Scalar::Approx(c - Interval::new(0.0, r.hi()));
            let off_diag_nonzero = !m.b.may_be_zero() || !m.c.may_be_zero();
            let (eigenvalues, moduli) = ordered(g1, g2);
            EigenReport {
                eigenvalues,
                moduli,
                diagonalizable: Diagonalizable::Borderline,
                jordan_class: if off_diag_nonzero {
                    JordanClass::JordanBlock
                } else {
                    JordanClass::DiagonalReal
                },
                mode,
            }
        }
    };
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn already_diagonal() {
        let r = eigen_analyze(&Matrix2::ratios([(1, 3), (0, 1), (0, 1), (1, 9)])).unwrap();
        assert_eq!(r.moduli[0], Scalar::ratio(1, 3));
        assert_eq!(r.moduli[1], Scalar::ratio(1, 9));
        assert_eq!(r.jordan_class, JordanClass::DiagonalReal);
        assert_eq!(r.diagonalizable, Diagonalizable::Yes);
    }

    #[test]
    fn shear_is_jordan_block() {
        let r = eigen_analyze(&Matrix2::ratios([(1, 3), (0, 1), (1, 4), (1, 3)])).unwrap();
        assert_eq!(r.eigenvalues[0].re, Scalar::ratio(1, 3));
        assert_eq!(r.eigenvalues[1].re, Scalar::ratio(1, 3));
        assert_eq!(r.jordan_class, JordanClass::JordanBlock);
        assert_eq!(r.diagonalizable, Diagonalizable::No);
    }

    #[test]
    fn scaled_rotation_is_complex() {
        let r = eigen_analyze(&Matrix2::ratios([(0, 1), (-1, 2), (1, 2), (0, 1)])).unwrap();
        assert_eq!(r.jordan_class, JordanClass::ComplexConjugate);
        assert_eq!(r.moduli[0], Scalar::ratio(1, 2));
        assert_eq!(r.moduli[0], r.moduli[1]);
        assert_eq!(r.eigenvalues[0].im.abs(), Scalar::ratio(1, 2));
        assert_eq!(r.eigenvalues[0].re, Scalar::zero());
    }

    #[test]
    fn singular_detected() {
        let m = Matrix2::ratios([(1, 1), (2, 1), (2, 1), (4, 1)]);
        assert!(matches!(eigen_analyze(&m), Err(Error::SingularMatrix(_))));
    }

    #[test]
    fn interval_borderline() {
        let m = Matrix2::new(
            Scalar::Approx(Interval::new(0.333, 0.334)),
            Scalar::float(0.0),
            Scalar::float(0.25),
            Scalar::Approx(Interval::new(0.333, 0.334)),
        );
        let r = eigen_analyze(&m).unwrap();
        assert_eq!(r.diagonalizable, Diagonalizable::Borderline);
    }

    proptest! {
        #[test]
        fn roots_satisfy_characteristic_polynomial(a in -9i64..9, b in -9i64..9, c in -9i64..9, d in -9i64..9) {
            prop_assume!(a * d - b * c != 0);
            let m = Matrix2::ratios([(a, 7), (b, 7), (c, 7), (d, 7)]);
            let r = eigen_analyze(&m).unwrap();
            for res in r.residuals(&m) {
                prop_assert!(res < 1e-10);
            }
            if r.jordan_class == JordanClass::ComplexConjugate {
                prop_assert_eq!(&r.moduli[0], &r.moduli[1]);
            }
        }

        #[test]
        fn similarity_transform_preserves_spectrum(
            a in -9i64..9, b in -9i64..9, c in -9i64..9, d in -9i64..9,
            p in -5i64..5, q in -5i64..5, s in -5i64..5, t in -5i64..5,
        ) {
            prop_assume!(a * d - b * c != 0 && p * t - q * s != 0);
            let m = Matrix2::ratios([(a, 5), (b, 5), (c, 5), (d, 5)]);
            let pm = Matrix2::ratios([(p, 1), (q, 1), (s, 1), (t, 1)]);
            let conj = &(&pm * &m) * &pm.inverse().unwrap();
            let r1 = eigen_analyze(&m).unwrap();
            let r2 = eigen_analyze(&conj).unwrap();
            let key = |r: &EigenReport| {
                let mut v: Vec<(f64, f64)> = r.eigenvalues.iter().map(|g| (g.re.to_f64(), g.im.to_f64())).collect();
                v.sort_by(|x, y| x.partial_cmp(y).unwrap());
                v
            };
            for (x, y) in key(&r1).iter().zip(key(&r2).iter()) {
                prop_assert!((x.0 - y.0).abs() < 1e-9 && (x.1.abs() - y.1.abs()).abs() < 1e-9);
            }
        }
    }
}
