//! Analysis toolkit for planar self-similar sets: certified affine embedding
//! checks and searches, cylinder covers and Hausdorff distances, dyadic
//! entropy of self-similar measures, and slice/projection calculus.

pub mod embed;
pub mod error;
pub mod group;
pub mod ifs;
pub mod measure;
pub mod numerics;
pub mod slice;

pub use error::{Error, Result};
