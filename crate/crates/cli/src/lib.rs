//! Scenario runner, report writer and SVG renderer behind the `fractembed`
//! binary.

pub mod cache;
pub mod error;
pub mod ops;
pub mod render;
pub mod report;
pub mod scenario;

pub use error::{CliError, Result};
