//! Shared fixtures for the kernel benchmarks.

use fractembed::ifs::{presets, AffineMap2, Ifs};

/// Named systems the benchmarks sweep over.
pub fn systems() -> Vec<(&'static str, Ifs)> {
    vec![("cantor", presets::cantor()), ("cxc", presets::cxc()), ("c_times_interval", presets::c_times_interval())]
}

/// `(x/3, y/9)`, the standard non-similarity embedding of C×C.
pub fn product_map() -> AffineMap2 {
    AffineMap2::ratios([(1, 3), (0, 1), (0, 1), (1, 9), (0, 1), (0, 1)])
}
