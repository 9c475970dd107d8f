//! Exact/interval scalars, 2×2 linear algebra and rational recognition.

pub mod contfrac;
pub mod eigen;
pub mod interval;
pub mod matrix;
pub mod scalar;

pub use contfrac::{rational_exponent, simplest_rational_in, RationalExponent};
pub use eigen::{eigen_analyze, ComplexScalar, Diagonalizable, EigenReport, JordanClass};
pub use interval::Interval;
pub use matrix::{Matrix2, Vector2};
pub use scalar::{parse_rational, rational, rational_sqrt, Scalar, ScalarMode};
