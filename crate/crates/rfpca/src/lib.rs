//! Dataset IO, experiment runners and the `rfpca` command-line tool.
//!
//! The numerics live in `rfpca-core`; this crate adds CSV loading,
//! stratified splits, parallel restarts and grid points, JSON/CSV/SVG output
//! and the CLI.

pub mod cli;
pub mod error;
pub mod experiment;
pub mod fit;
pub mod loader;
pub mod model;
pub mod split;
pub mod svg;

pub use error::{AppError, Result};
