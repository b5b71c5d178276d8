//! Random perforated domains and numerical homogenization experiments.
//!
//! The crate samples Poisson configurations, builds random obstacle sets
//! (tube networks from random-connection graphs and Boolean ball systems),
//! rasterizes them onto node grids, solves the perforated and homogenized
//! Dirichlet problems, and measures capacity functionals and convergence.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod capacity;
pub mod error;
pub mod expr;
pub mod geom;
pub mod grid;
pub mod grid_solver;
pub mod homogenization;
pub mod point_process;
pub mod random_geometry;
pub mod rng;

pub use error::{Error, Result};
pub use geom::{AxisBox, Coord};
pub use grid::Grid;
