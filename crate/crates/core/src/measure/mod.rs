//! Dyadic discretisation of self-similar measures and the entropy calculus
//! built on it. Logarithms are base 2 throughout, so Lebesgue measure on
//! `[0,1]^d` has entropy dimension `d`.

pub mod components;
pub mod directional;
pub mod disintegrate;
pub mod dyadic;
pub mod selfsimilar;

pub use components::{sample_components, ComponentDraw};
pub use directional::{concentration_test, convolve, saturation_test, ConcentrationReport, SaturationReport};
pub use disintegrate::{
    column_restriction, dimension_conservation_check, disintegrate, x_digits, x_marginal, ConservationReport, Fiber,
    XDigits,
};
pub use dyadic::{cell_index, pairwise_sum, Cell, DyadicMeasure, Straddle};
pub use selfsimilar::{
    discretize, discretize_with_cap, entropy_dimension, entropy_dimension_of, fit_line, EntropyDimension, EntropyRow,
    SelfSimilarMeasure, DISCRETIZE_NODE_CAP,
};
